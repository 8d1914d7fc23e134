"""Outer sizing: choose build counts maximising lifetime sales minus total cost.

Line and pipe counts are enumerated exactly. For each such outer point the
electrolyzer and fuel-cell capacities are first optimised as continuous,
priced LP variables; the integer unit counts are then taken from the
floor/ceiling neighbours of that optimum. The continuous value bounds every
integer completion from above, so outer points whose bound cannot beat the
incumbent are skipped without affecting the result.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dispatch import CapacityPrices, DispatchProblem, DispatchResult, solve_dispatch
from .model import (CaseId, ComponentCatalog, DayProfile, Scenario, SizingDecision, build_topology,
                    electrolyzer_site_count, validate_scenario)
from .physics import PipeLeg, gas_properties

DAYS_PER_YEAR = 365


def lifetime_factor(years: int, discount_rate: float = 0.0) -> float:
    """Multiplier turning an annual amount into a lifetime amount (plain ``years`` when undiscounted)."""
    if discount_rate == 0.0:
        return float(years)
    return sum((1.0 + discount_rate) ** -y for y in range(1, years + 1))


@dataclass(frozen=True)
class CostBreakdown:
    capex: dict[str, float]
    annual_opex: dict[str, float]
    years: float

    @property
    def total_capex(self) -> float:
        return sum(self.capex.values())

    @property
    def total(self) -> float:
        return sum(self.capex[k] + self.years * self.annual_opex[k] for k in self.capex)

    def subtotal(self, key: str) -> float:
        return self.capex[key] + self.years * self.annual_opex[key]


COST_CLASSES = ("lines", "lp_pipes", "hp_pipes", "electrolyzers", "fuel_cells", "compressors", "storage")


def compressor_capacity_kgph(d: SizingDecision, case: CaseId, c: ComponentCatalog) -> float:
    """Installed compression, sized to the electrolyzers feeding it (plus the HSC booster for HP)."""
    h2 = sum(d.electrolyzers_per_site) * c.electrolyzer.rated_mw / c.electrolyzer.energy_intensity_mwh_per_kg
    return 2.0 * h2 if case is CaseId.HP else h2


def total_cost(d: SizingDecision, case: CaseId | str, s: Scenario, c: ComponentCatalog) -> CostBreakdown:
    case = CaseId.parse(case)
    topo = build_topology(case, s)
    capex = dict.fromkeys(COST_CLASSES, 0.0)
    opex = dict.fromkeys(COST_CLASSES, 0.0)

    def add(key, amount, frac):
        capex[key] += amount
        opex[key] += frac * amount

    for e in topo.lines:
        n = d.lines_per_farm[e.farm]
        add("lines", n * (c.line.capex_per_km * e.length_km + c.line.capex_converter_pair), c.line.opex_frac_per_year)
    for e in topo.pipes:
        if e.kind == "lp_pipe":
            add("lp_pipes", d.lp_pipes_per_farm[e.farm] * c.pipeline_lp.capex_per_km * e.length_km,
                c.pipeline_lp.opex_frac)
        else:
            add("hp_pipes", d.hp_pipes * c.pipeline_hp.capex_per_km * e.length_km, c.pipeline_hp.opex_frac)
    if case is not CaseId.HVDC:
        add("electrolyzers", sum(d.electrolyzers_per_site) * c.electrolyzer.capex_per_unit, c.electrolyzer.opex_frac)
        add("fuel_cells", d.fuel_cells * c.fuel_cell.capex_per_unit, c.fuel_cell.opex_frac)
        add("compressors", compressor_capacity_kgph(d, case, c) * c.compressor.capex_per_kgph_capacity,
            c.compressor.opex_frac)
        if sum(d.electrolyzers_per_site) or d.fuel_cells:
            add("storage", s.storage_capacity_kg * c.storage.capex_per_kg, c.storage.opex_frac)
    return CostBreakdown(capex, opex, lifetime_factor(s.horizon_years, c.discount_rate))


@dataclass
class Evaluation:
    decision: SizingDecision
    net_benefit: float
    cost: CostBreakdown
    dispatch: DispatchResult | None
    day_revenue_usd: float


def _days(day: DayProfile | Sequence[DayProfile]) -> list[DayProfile]:
    return [day] if isinstance(day, DayProfile) else list(day)


def evaluate(d: SizingDecision, case: CaseId | str, s: Scenario, c: ComponentCatalog,
             day: DayProfile | Sequence[DayProfile], segments: int = 10) -> Evaluation:
    """Net benefit of a fixed build, keeping the dispatch of the first day.

    Several days are averaged into one representative daily revenue.
    """
    case = CaseId.parse(case)
    cost = total_cost(d, case, s, c)
    if d.is_empty:
        return Evaluation(d, 0.0 - cost.total, cost, None, 0.0)
    results = [solve_dispatch(DispatchProblem(case, s, c, d, dy, segments)) for dy in _days(day)]
    revenue = sum(r.day_revenue_usd for r in results) / len(results)
    benefit = DAYS_PER_YEAR * lifetime_factor(s.horizon_years, c.discount_rate) * revenue - cost.total
    return Evaluation(d, benefit, cost, results[0], revenue)


def net_benefit(d: SizingDecision, case: CaseId | str, s: Scenario, c: ComponentCatalog,
                day: DayProfile | Sequence[DayProfile], segments: int = 10) -> float:
    return evaluate(d, case, s, c, day, segments).net_benefit


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchBounds:
    """Extra counts enumerated above the capacity-implied minimum for lines and pipes."""

    line_slack: int = 1
    pipe_slack: int = 1


def _pipe_limit(spec, c: ComponentCatalog, length_km: float) -> float:
    leg = PipeLeg.from_spec(spec, gas_properties(c.gas, spec), length_km, 1, c.weymouth_coeff)
    return leg.per_pipe_limit_kgph


def outer_ranges(case: CaseId, s: Scenario, c: ComponentCatalog, bounds: SearchBounds = SearchBounds()):
    """Candidate counts: (lines per farm, LP pipes per farm, HP pipes), each a range."""
    n = s.farm_count
    cp_e = c.electrolyzer.energy_intensity_mwh_per_kg
    zero = [range(1)] * n
    lines = zero
    if case in (CaseId.HVDC, CaseId.HYBRID):
        lines = [range(math.ceil(cap / c.line.p_lim_mw) + bounds.line_slack + 1) for cap in s.farm_capacity_mw]
    if case is CaseId.HVDC:
        return lines, zero, range(1)
    topo = build_topology(case, s)
    peak_h2 = sum(s.farm_capacity_mw) / cp_e
    hp_lim = _pipe_limit(c.pipeline_hp, c, topo.hp_pipe.length_km)
    hp = range(math.ceil(peak_h2 / hp_lim) + bounds.pipe_slack + 1)
    lp = zero
    if case is CaseId.HP:
        lp = [range(math.ceil(s.farm_capacity_mw[e.farm] / cp_e / _pipe_limit(c.pipeline_lp, c, e.length_km))
                    + bounds.pipe_slack + 1) for e in topo.lp_pipes]
    return lines, lp, hp


def capacity_prices(case: CaseId, s: Scenario, c: ComponentCatalog) -> CapacityPrices:
    """Lifetime cost per MW of electrolysis (with its compression) and of fuel cells, per day of revenue."""
    life = lifetime_factor(s.horizon_years, c.discount_rate)
    per_day = DAYS_PER_YEAR * life
    el = c.electrolyzer.capex_per_unit / c.electrolyzer.rated_mw * (1 + life * c.electrolyzer.opex_frac)
    stages = 2.0 if case is CaseId.HP else 1.0
    comp = (stages * c.compressor.capex_per_kgph_capacity / c.electrolyzer.energy_intensity_mwh_per_kg
            * (1 + life * c.compressor.opex_frac))
    fc = c.fuel_cell.capex_per_unit / c.fuel_cell.rated_mw * (1 + life * c.fuel_cell.opex_frac)
    sites = electrolyzer_site_count(case, s.farm_count)
    return CapacityPrices(((el + comp) / per_day,) * sites, fc / per_day)


def _neighbours(value: float) -> list[int]:
    lo, hi = math.floor(value), math.ceil(value)
    if abs(value - round(value)) < 1e-9:
        return [int(round(value))]
    return [lo, hi]


def _better(a: Evaluation, b: Evaluation | None) -> bool:
    """Higher benefit wins; ties go to lower capex, then the smaller count vector."""
    if b is None:
        return True
    ka = (-a.net_benefit, a.cost.total_capex, a.decision.as_vector())
    kb = (-b.net_benefit, b.cost.total_capex, b.decision.as_vector())
    return ka < kb


@dataclass
class SizingResult:
    case: CaseId
    decision: SizingDecision
    net_benefit: float
    cost: CostBreakdown
    dispatch: DispatchResult | None
    day_revenue_usd: float
    evaluated: int = 0
    pruned: int = 0
    continuous_capacity_mw: dict[str, float] = field(default_factory=dict)


def optimize_sizing(case: CaseId | str, s: Scenario, c: ComponentCatalog, day: DayProfile, *,
                    bounds: SearchBounds = SearchBounds(), segments: int = 10) -> SizingResult:
    case = CaseId.parse(case)
    validate_scenario(s, c, day)
    n = s.farm_count
    sites = electrolyzer_site_count(case, n)
    lines_r, lp_r, hp_r = outer_ranges(case, s, c, bounds)
    zero = SizingDecision.zero(case, n)
    best = evaluate(zero, case, s, c, day, segments)
    evaluated, pruned = 1, 0
    best_caps: dict[str, float] = {}

    outer = [SizingDecision(lines, lps, hp, (0,) * sites, 0)
             for lines in itertools.product(*lines_r)
             for lps in itertools.product(*lp_r)
             for hp in hp_r]
    outer = [o for o in outer if not o.is_empty]

    if case is CaseId.HVDC:
        for d in outer:
            ev = evaluate(d, case, s, c, day, segments)
            evaluated += 1
            if _better(ev, best):
                best = ev
        return SizingResult(case, best.decision, best.net_benefit, best.cost, best.dispatch,
                            best.day_revenue_usd, evaluated, pruned)

    prices = capacity_prices(case, s, c)
    life = DAYS_PER_YEAR * lifetime_factor(s.horizon_years, c.discount_rate)
    staged = []
    for d in outer:
        fixed = total_cost(d, case, s, c)
        if not _can_deliver(case, d):
            pruned += 1
            continue
        relaxed = solve_dispatch(DispatchProblem(case, s, c, d, day, segments), prices)
        evaluated += 1
        # storage is paid once any hydrogen capacity is installed
        storage = s.storage_capacity_kg * c.storage.capex_per_kg * (1 + fixed.years * c.storage.opex_frac)
        bound = max(life * relaxed.objective - fixed.total - storage, -fixed.total)
        staged.append((bound, d, relaxed))

    staged.sort(key=lambda item: (-item[0], item[1].as_vector()))
    for bound, d, relaxed in staged:
        if bound < best.net_benefit - 1e-9 * abs(best.net_benefit) - 1e-6:
            pruned += 1
            continue
        caps = relaxed.capacities
        site_names = build_topology(case, s).electrolyzer_sites
        el_counts = [_neighbours(caps[f"electrolyzer.{site}"] / c.electrolyzer.rated_mw) for site in site_names]
        fc_counts = _neighbours(caps["fuel_cell"] / c.fuel_cell.rated_mw)
        for combo in itertools.product(*el_counts, fc_counts):
            cand = SizingDecision(d.lines_per_farm, d.lp_pipes_per_farm, d.hp_pipes, combo[:-1], combo[-1])
            ev = evaluate(cand, case, s, c, day, segments)
            evaluated += 1
            if _better(ev, best):
                best = ev
                best_caps = dict(caps)
    return SizingResult(case, best.decision, best.net_benefit, best.cost, best.dispatch, best.day_revenue_usd,
                        evaluated, pruned, best_caps)


def _can_deliver(case: CaseId, d: SizingDecision) -> bool:
    if case is CaseId.HYBRID:
        return d.hp_pipes > 0 and any(d.lines_per_farm)
    if case is CaseId.HP:
        return d.hp_pipes > 0 and any(d.lp_pipes_per_farm)
    return any(d.lines_per_farm)


def exhaustive_sizing(case: CaseId | str, s: Scenario, c: ComponentCatalog, day: DayProfile,
                      electrolyzer_counts: Iterable[int], fuel_cell_counts: Iterable[int],
                      bounds: SearchBounds = SearchBounds(), segments: int = 10) -> Evaluation:
    """Brute force over every integer tuple; only practical for toy instances."""
    case = CaseId.parse(case)
    lines_r, lp_r, hp_r = outer_ranges(case, s, c, bounds)
    sites = electrolyzer_site_count(case, s.farm_count)
    el_counts = list(electrolyzer_counts) if sites else [0]
    fc_counts = list(fuel_cell_counts) if case is not CaseId.HVDC else [0]
    best = None
    for lines in itertools.product(*lines_r):
        for lps in itertools.product(*lp_r):
            for hp in hp_r:
                for els in itertools.product(el_counts, repeat=sites):
                    for fc in fc_counts:
                        d = SizingDecision(lines, lps, hp, els, fc)
                        ev = evaluate(d, case, s, c, day, segments)
                        if _better(ev, best):
                            best = ev
    return best


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

TABLE_COLUMNS = ("# HVDC lines", "# LPHP", "# HPHP", "# electrolyzers", "# fuel cells")


def table_row(case: CaseId, d: SizingDecision) -> list[str]:
    """Counts in the published sizing-table layout; '-' marks components the case lacks."""
    def show(value, used):
        return f"{value:,}" if used else "-"

    return [
        show(sum(d.lines_per_farm), case is not CaseId.HP),
        show(sum(d.lp_pipes_per_farm), case is CaseId.HP),
        show(d.hp_pipes, case is not CaseId.HVDC),
        show(sum(d.electrolyzers_per_site), case is not CaseId.HVDC),
        show(d.fuel_cells, case is not CaseId.HVDC),
    ]


def format_table(rows: Sequence[tuple[CaseId, SizingDecision, float]]) -> str:
    header = ["Case", *TABLE_COLUMNS, "Net benefit (B$)"]
    body = [[f"{case.value} case", *table_row(case, d), f"{benefit / 1e9:.1f}"] for case, d, benefit in rows]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in [header, *body]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def line_km(case: CaseId, d: SizingDecision, s: Scenario) -> float:
    topo = build_topology(case, s)
    return float(sum(d.lines_per_farm[e.farm] * e.length_km for e in topo.lines))


def report_dict(r: SizingResult, s: Scenario) -> dict:
    return {
        "case": r.case.value,
        "decision": r.decision.to_dict(),
        "net_benefit_usd": r.net_benefit,
        "day_revenue_usd": r.day_revenue_usd,
        "total_cost_usd": r.cost.total,
        "capex_usd": dict(r.cost.capex),
        "annual_opex_usd": dict(r.cost.annual_opex),
        "line_km": line_km(r.case, r.decision, s),
        "evaluated": r.evaluated,
        "pruned": r.pruned,
    }


def decision_from_report(data: dict) -> SizingDecision:
    return SizingDecision.from_dict(data["decision"])

