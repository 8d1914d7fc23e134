"""One-axis scenario sweeps, crossover search and the three-case comparison."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dispatch import DispatchError, summarize
from .lp import LPError
from .model import CaseId, ComponentCatalog, DayProfile, Scenario, SizingDecision, ValidationError
from .physics import PhysicsError
from .sizing import SearchBounds, SizingResult, format_table, line_km, optimize_sizing

AXES = ("round_trip_efficiency", "conversion_cost_reduction", "distance_scale", "distance_km", "farm_capacity_mw")
AXIS_ALIASES = {
    "efficiency": "round_trip_efficiency",
    "cost": "conversion_cost_reduction",
    "distance": "distance_km",
    "scale": "distance_scale",
    "capacity": "farm_capacity_mw",
}
ALL_CASES = (CaseId.HVDC, CaseId.HYBRID, CaseId.HP)


def _halve(c: ComponentCatalog) -> ComponentCatalog:
    return replace(
        c,
        electrolyzer=replace(c.electrolyzer, capex_per_unit=c.electrolyzer.capex_per_unit / 2),
        fuel_cell=replace(c.fuel_cell, capex_per_unit=c.fuel_cell.capex_per_unit / 2),
        pipeline_lp=replace(c.pipeline_lp, capex_per_km=c.pipeline_lp.capex_per_km / 2),
        pipeline_hp=replace(c.pipeline_hp, capex_per_km=c.pipeline_hp.capex_per_km / 2),
    )


# Named cost overrides; "future_halved" halves electrolyzer, fuel-cell and hydrogen pipeline capex.
PRESETS: dict[str, Callable[[ComponentCatalog], ComponentCatalog]] = {
    "current": lambda c: c,
    "future_halved": _halve,
}


def apply_preset(c: ComponentCatalog, name: str) -> ComponentCatalog:
    try:
        return PRESETS[name](c)
    except KeyError:
        raise ValidationError([f"preset: unknown preset {name!r} (choose from {', '.join(PRESETS)})"]) from None


def with_efficiency(c: ComponentCatalog, v: float) -> ComponentCatalog:
    """Hold the electrolyzer intensity fixed and set the fuel-cell yield to ``v`` times it."""
    return replace(c, fuel_cell=replace(c.fuel_cell,
                                        energy_yield_mwh_per_kg=v * c.electrolyzer.energy_intensity_mwh_per_kg))


def with_cost_reduction(c: ComponentCatalog, v: float) -> ComponentCatalog:
    return replace(c,
                   electrolyzer=replace(c.electrolyzer, capex_per_unit=c.electrolyzer.capex_per_unit * (1 - v)),
                   fuel_cell=replace(c.fuel_cell, capex_per_unit=c.fuel_cell.capex_per_unit * (1 - v)))


def reference_distance_km(s: Scenario) -> float:
    """Unscaled mean farm-to-shore distance; the distance axis is expressed against it."""
    return float(np.mean(s.dist_farm_substation_km))


def canonical_axis(axis: str) -> str:
    axis = AXIS_ALIASES.get(axis, axis)
    if axis not in AXES:
        raise ValidationError([f"axis: unknown axis {axis!r} (choose from {', '.join(AXES)})"])
    return axis


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple[float, ...]
    scenario: Scenario
    catalog: ComponentCatalog
    day: DayProfile
    cases: tuple[CaseId, ...] = ALL_CASES
    preset: str = "current"
    base_efficiency: float | None = None
    segments: int = 10
    bounds: SearchBounds = SearchBounds()

    def __post_init__(self):
        object.__setattr__(self, "axis", canonical_axis(self.axis))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "cases", tuple(CaseId.parse(k) for k in self.cases))
        errors = spec_errors(self)
        if errors:
            raise ValidationError(errors)

    @property
    def span(self) -> float:
        return self.values[-1] - self.values[0]

    def inputs_at(self, v: float) -> tuple[Scenario, ComponentCatalog]:
        """Scenario and catalog for one axis value: preset first, then base efficiency, then the axis."""
        s = self.scenario
        c = apply_preset(self.catalog, self.preset)
        if self.base_efficiency is not None:
            c = with_efficiency(c, self.base_efficiency)
        if self.axis == "round_trip_efficiency":
            c = with_efficiency(c, v)
        elif self.axis == "conversion_cost_reduction":
            c = with_cost_reduction(c, v)
        elif self.axis == "distance_scale":
            s = replace(s, distance_scale=v)
        elif self.axis == "distance_km":
            s = replace(s, distance_scale=v / reference_distance_km(s))
        else:
            s = replace(s, farm_capacity_mw=(v,) * s.farm_count)
        return s, c


def spec_errors(spec: SweepSpec) -> list[str]:
    errors = []
    v = spec.values
    if not v:
        errors.append("values: must be nonempty")
    if any(not math.isfinite(x) for x in v):
        errors.append("values: must be finite")
    if any(b <= a for a, b in zip(v, v[1:])):
        errors.append("values: must be strictly increasing")
    if not spec.cases:
        errors.append("cases: must be nonempty")
    if len(set(spec.cases)) != len(spec.cases):
        errors.append("cases: duplicate case")
    if spec.preset not in PRESETS:
        errors.append(f"preset: unknown preset {spec.preset!r}")
    if spec.base_efficiency is not None and not 0 < spec.base_efficiency < 1:
        errors.append("base_efficiency: must lie in (0, 1)")
    checks = {
        "round_trip_efficiency": (lambda x: 0 < x < 1, "efficiency values must lie in (0, 1)"),
        "conversion_cost_reduction": (lambda x: 0 <= x < 1, "cost reductions must lie in [0, 1)"),
        "distance_scale": (lambda x: x > 0, "distance scales must be positive"),
        "distance_km": (lambda x: x > 0, "distances must be positive"),
        "farm_capacity_mw": (lambda x: x >= 0, "farm capacities must be nonnegative"),
    }
    ok, message = checks[spec.axis]
    if any(not ok(x) for x in v):
        errors.append(f"values: {message}")
    return errors


@dataclass(frozen=True)
class Cell:
    axis_value: float
    case: CaseId
    net_benefit: float
    decision: SizingDecision | None
    day_revenue_usd: float
    line_km: float
    error: str | None = None
    error_kind: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class Crossover:
    """Sign change of ``benefit(a) - benefit(b)``; ``lower``/``upper`` bracket the axis value."""

    case_a: CaseId
    case_b: CaseId
    lower: float
    upper: float
    direction: str
    extrapolated: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def evaluate_cell(spec: SweepSpec, v: float, case: CaseId) -> Cell:
    """Size one case at one axis value; failures are captured with their coordinates."""
    where = f"{spec.axis}={v:g} case={case.value}"
    try:
        s, c = spec.inputs_at(v)
        r = optimize_sizing(case, s, c, spec.day, bounds=spec.bounds, segments=spec.segments)
    except ValidationError as exc:
        return Cell(v, case, math.nan, None, math.nan, math.nan, f"{where}: {exc}", "validation")
    except (DispatchError, LPError, PhysicsError) as exc:
        return Cell(v, case, math.nan, None, math.nan, math.nan, f"{where}: {exc}", "solver")
    return Cell(v, case, r.net_benefit, r.decision, r.day_revenue_usd, line_km(case, r.decision, s))


def _evaluate_job(job):
    return evaluate_cell(*job)


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: dict[tuple[int, CaseId], Cell]
    crossovers: list[Crossover] = field(default_factory=list)
    extrapolated: list[Crossover] = field(default_factory=list)

    def benefits(self, case: CaseId | str) -> np.ndarray:
        case = CaseId.parse(case)
        return np.array([self.cells[i, case].net_benefit for i in range(len(self.spec.values))])

    @property
    def errors(self) -> list[Cell]:
        return [cell for cell in self.cells.values() if not cell.ok]

    def table_csv(self) -> str:
        """One row per axis value, one column per case, benefits in billions USD to one decimal."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.spec.axis, *(f"{k.value} (B$)" for k in self.spec.cases)])
        for i, v in enumerate(self.spec.values):
            row = [f"{v:g}"]
            for k in self.spec.cases:
                cell = self.cells[i, k]
                row.append(f"{cell.net_benefit / 1e9:.1f}" if cell.ok else "error")
            w.writerow(row)
        return buf.getvalue()

    def plot_csv(self, case: CaseId | str) -> str:
        case = CaseId.parse(case)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.spec.axis, "net_benefit_usd"])
        for i, v in enumerate(self.spec.values):
            w.writerow([f"{v:g}", repr(self.cells[i, case].net_benefit)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        def cell_dict(cell: Cell) -> dict:
            return {
                "axis_value": cell.axis_value,
                "case": cell.case.value,
                "net_benefit_usd": None if not cell.ok else cell.net_benefit,
                "day_revenue_usd": None if not cell.ok else cell.day_revenue_usd,
                "line_km": None if not cell.ok else cell.line_km,
                "decision": cell.decision.to_dict() if cell.decision else None,
                "error": cell.error,
            }

        def cross_dict(x: Crossover) -> dict:
            return {"case_a": x.case_a.value, "case_b": x.case_b.value, "lower": x.lower, "upper": x.upper,
                    "direction": x.direction}

        return {
            "axis": self.spec.axis,
            "values": list(self.spec.values),
            "cases": [k.value for k in self.spec.cases],
            "preset": self.spec.preset,
            "base_efficiency": self.spec.base_efficiency,
            "efficiency_semantics": "fuel-cell yield = value x electrolyzer intensity (intensity held fixed)",
            "cells": [cell_dict(self.cells[i, k]) for i in range(len(self.spec.values)) for k in self.spec.cases],
            "crossovers": [cross_dict(x) for x in self.crossovers],
            "extrapolated_crossovers": [cross_dict(x) for x in self.extrapolated],
        }


def run_sweep(spec: SweepSpec, *, workers: int = 1) -> SweepResult:
    """Evaluate every (axis value, case) cell; cells are assembled in axis order regardless of ``workers``."""
    jobs = [(spec, v, k) for v in spec.values for k in spec.cases]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_evaluate_job, jobs))
    else:
        cells = [_evaluate_job(j) for j in jobs]
    grid = {}
    for idx, cell in enumerate(cells):
        grid[idx // len(spec.cases), cell.case] = cell
    result = SweepResult(spec, grid)
    for i, a in enumerate(spec.cases):
        for b in spec.cases[i + 1:]:
            result.crossovers.extend(bracket_crossings(spec.values, result.benefits(a), result.benefits(b), a, b))
            result.extrapolated.extend(
                extrapolated_crossings(spec.values, result.benefits(a), result.benefits(b), a, b))
    return result


def _direction(sign_before: float) -> str:
    return "a_overtakes_b" if sign_before < 0 else "b_overtakes_a"


def bracket_crossings(values: Sequence[float], a: np.ndarray, b: np.ndarray, case_a: CaseId,
                      case_b: CaseId) -> list[Crossover]:
    """All grid intervals over which ``a - b`` changes sign.

    Points where the difference is exactly zero are not a crossing on their
    own; a sign change across a run of zeros is reported as the run itself.
    """
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    idx = [i for i, d in enumerate(diff) if math.isfinite(d) and d != 0.0]
    out = []
    for i, j in zip(idx, idx[1:]):
        if np.sign(diff[i]) == np.sign(diff[j]):
            continue
        lo, hi = (values[i], values[j]) if j == i + 1 else (values[i + 1], values[j - 1])
        out.append(Crossover(case_a, case_b, float(lo), float(hi), _direction(diff[i])))
    return out


def extrapolated_crossings(values: Sequence[float], a: np.ndarray, b: np.ndarray, case_a: CaseId,
                           case_b: CaseId) -> list[Crossover]:
    """Crossings implied by linearly extending the end segments beyond the swept range."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if len(values) < 2 or not np.all(np.isfinite(diff)):
        return []
    out = []
    for near, far in ((-1, -2), (0, 1)):
        slope = (diff[far] - diff[near]) / (values[far] - values[near])
        if diff[near] == 0.0 or slope == 0.0:
            continue
        root = values[near] - diff[near] / slope
        above = near == -1
        if (above and root > values[near]) or (not above and root < values[near]):
            # sign of the difference on the low side of the root
            before = diff[near] if above else -diff[near]
            out.append(Crossover(case_a, case_b, float(root), float(root), _direction(before), True))
    return out


def find_crossover(result: SweepResult, case_a: CaseId | str, case_b: CaseId | str, *,
                   rel_width: float = 0.01, refine: bool = True) -> list[Crossover]:
    """In-range sign changes of ``benefit(a) - benefit(b)``, each bisected to ``rel_width`` of the span.

    Refinement re-runs the sizing at interior axis values. An empty list
    means no crossing inside the swept range; see ``result.extrapolated``
    for crossings implied beyond it.
    """
    case_a, case_b = CaseId.parse(case_a), CaseId.parse(case_b)
    spec = result.spec
    for k in (case_a, case_b):
        if k not in spec.cases:
            raise ValueError(f"case {k.value} not in sweep")
    brackets = bracket_crossings(spec.values, result.benefits(case_a), result.benefits(case_b), case_a, case_b)
    if not refine:
        return brackets
    target = rel_width * spec.span
    refined = []
    for x in brackets:
        lo, hi = x.lower, x.upper
        sign_lo = 1.0 if x.direction == "b_overtakes_a" else -1.0
        while hi - lo > target:
            mid = 0.5 * (lo + hi)
            ca, cb = evaluate_cell(spec, mid, case_a), evaluate_cell(spec, mid, case_b)
            if not (ca.ok and cb.ok):
                break
            d = ca.net_benefit - cb.net_benefit
            if d == 0.0:
                lo = hi = mid
            elif np.sign(d) == sign_lo:
                lo = mid
            else:
                hi = mid
        refined.append(replace(x, lower=lo, upper=hi))
    return refined


# ---------------------------------------------------------------------------
# three-case comparison
# ---------------------------------------------------------------------------

@dataclass
class Comparison:
    results: dict[CaseId, SizingResult]
    ranking: list[CaseId]
    table: str
    dispatch: dict[CaseId, dict]
    line_km: dict[CaseId, float]

    def to_dict(self) -> dict:
        return {
            "ranking": [k.value for k in self.ranking],
            "cases": {
                k.value: {
                    "net_benefit_usd": r.net_benefit,
                    "day_revenue_usd": r.day_revenue_usd,
                    "total_cost_usd": r.cost.total,
                    "decision": r.decision.to_dict(),
                    "line_km": self.line_km[k],
                    "dispatch": self.dispatch[k],
                }
                for k, r in self.results.items()
            },
        }

    def text(self) -> str:
        out = ["Ranking (best first):"]
        out += [f"  {i + 1}. {k.value}  {self.results[k].net_benefit / 1e9:.1f} B$" for i, k in enumerate(self.ranking)]
        return "\n".join(out) + "\n\n" + self.table


def compare_cases(s: Scenario, c: ComponentCatalog, day: DayProfile, *, cases: Sequence[CaseId] = ALL_CASES,
                  bounds: SearchBounds = SearchBounds(), segments: int = 10) -> Comparison:
    results = {}
    for k in cases:
        k = CaseId.parse(k)
        results[k] = optimize_sizing(k, s, c, day, bounds=bounds, segments=segments)
    order = {k: i for i, k in enumerate(ALL_CASES)}
    ranking = sorted(results, key=lambda k: (-results[k].net_benefit, order[k]))
    table = format_table([(k, results[k].decision, results[k].net_benefit) for k in results])
    dispatch = {k: summarize(r.dispatch) if r.dispatch is not None else {} for k, r in results.items()}
    km = {k: line_km(k, r.decision, s) for k, r in results.items()}
    return Comparison(results, ranking, table, dispatch, km)
