"""Hourly dispatch of a fixed build: maximise one day's energy sales.

Line losses and pipeline pressure drops are quadratic equalities. Each is
replaced by a convex piecewise-linear over-estimator of the input needed for
a given output (line input power, pipeline inlet pressure), built from chords
through ``segments`` equidistant samples up to the component limit. Since the
chords sit above the true curve, every LP-feasible point is physically
feasible; at the optimum the reported input is the chord value, whose distance
from the true curve is bounded by ``verify_tightness``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lp import LinearProgram, LPInfeasible, LPUnbounded
from .model import (HSC, SUBSTATION, CaseId, ComponentCatalog, DayProfile, Scenario, SizingDecision,
                    Topology, build_topology, electrolyzer_site_count, validate_scenario)
from .physics import LineLeg, PipeLeg, gas_properties, hvdc_send, pipeline_inlet_pressure

BALANCE_TOL_MW = 1e-6


class DispatchError(RuntimeError):
    pass


class DispatchInfeasible(DispatchError):
    def __init__(self, message: str, binding: list[str]):
        super().__init__(f"{message}; suspect constraints: {', '.join(binding) or 'unknown'}")
        self.binding = binding


@dataclass(frozen=True)
class DispatchProblem:
    case: CaseId
    scenario: Scenario
    catalog: ComponentCatalog
    sizing: SizingDecision
    day: DayProfile
    segments: int = 10

    def __post_init__(self):
        object.__setattr__(self, "case", CaseId.parse(self.case))
        if self.segments < 2:
            raise ValueError("segments must be at least 2")
        n = self.scenario.farm_count
        sites = electrolyzer_site_count(self.case, n)
        s = self.sizing
        if len(s.lines_per_farm) != n or len(s.lp_pipes_per_farm) != n or len(s.electrolyzers_per_site) != sites:
            raise ValueError(f"sizing shape does not match {self.case.value} with {n} farms")

    @property
    def topology(self) -> Topology:
        return build_topology(self.case, self.scenario)

    def electrolyzer_mw(self, site: int) -> float:
        return self.sizing.electrolyzers_per_site[site] * self.catalog.electrolyzer.rated_mw

    @property
    def fuel_cell_mw(self) -> float:
        return self.sizing.fuel_cells * self.catalog.fuel_cell.rated_mw

    def line_legs(self) -> list[LineLeg]:
        c = self.catalog
        return [LineLeg.from_spec(c.line, e.length_km, self.sizing.lines_per_farm[e.farm], c.loss_coeff)
                for e in self.topology.lines]

    def pipe_legs(self) -> dict[str, PipeLeg]:
        """Pipe legs keyed by edge name."""
        c = self.catalog
        legs = {}
        for e in self.topology.pipes:
            spec = c.pipeline_lp if e.kind == "lp_pipe" else c.pipeline_hp
            count = self.sizing.lp_pipes_per_farm[e.farm] if e.kind == "lp_pipe" else self.sizing.hp_pipes
            legs[e.name] = PipeLeg.from_spec(spec, gas_properties(c.gas, spec), e.length_km, count,
                                             c.weymouth_coeff)
        return legs


# ---------------------------------------------------------------------------
# piecewise-linear over-estimators
# ---------------------------------------------------------------------------

def chords(f: Callable[[float], float], upper: float, points: int) -> tuple[np.ndarray, np.ndarray]:
    """Slopes and intercepts of the chords of ``f`` on ``points`` samples over [0, upper].

    For convex ``f`` the interpolant equals the pointwise maximum of these lines.
    """
    x = np.linspace(0.0, upper, points)
    y = np.array([f(v) for v in x])
    slopes = np.diff(y) / np.diff(x)
    intercepts = y[:-1] - slopes * x[:-1]
    return slopes, intercepts


def line_chords(leg: LineLeg, points: int):
    """Chords of the single-line input curve; intercepts scale with the line count."""
    one = LineLeg(leg.distance_km, leg.resistance_ohm_per_km, leg.voltage_kv, leg.converter_eff, 1,
                  leg.p_lim_mw, leg.loss_coeff)
    return chords(lambda p: hvdc_send(one, p), leg.p_lim_mw, points)


def pipe_chords(leg: PipeLeg, points: int):
    """Chords of the inlet-pressure curve against per-pipe flow."""
    one = PipeLeg(leg.distance_km, leg.diameter_mm, leg.outlet_pressure_bar, leg.max_inlet_pressure_bar,
                  1, leg.h_lim_kgph, leg.gas, leg.weymouth_coeff)
    return chords(lambda h: pipeline_inlet_pressure(one, h, check_limit=False), leg.per_pipe_limit_kgph, points)


def line_gap_bound(leg: LineLeg, points: int) -> float:
    """Largest chord-minus-curve gap of the bundle's input curve (MW)."""
    if leg.count == 0:
        return 0.0
    h = leg.p_lim_mw / (points - 1)
    c1 = leg.loss_coeff * leg.distance_km * leg.resistance_ohm_per_km / leg.voltage_kv**2
    return leg.count * h * h * c1 / (4.0 * leg.converter_eff)


def pipe_gap_bound(leg: PipeLeg, points: int) -> float:
    """Largest chord-minus-curve gap of the inlet pressure (bar); curvature peaks at zero flow."""
    if leg.count == 0:
        return 0.0
    h = leg.per_pipe_limit_kgph / (points - 1)
    return h * h * leg.resistance / (8.0 * leg.outlet_pressure_bar)


# ---------------------------------------------------------------------------
# LP construction
# ---------------------------------------------------------------------------

@dataclass
class CapacityPrices:
    """Per-day objective cost of one MW of electrolyzer (per site) or fuel-cell capacity.

    When passed to :func:`build_dispatch` the capacities become LP variables.
    """

    electrolyzer: tuple[float, ...]
    fuel_cell: float


@dataclass
class DispatchLP:
    problem: DispatchProblem
    lp: LinearProgram
    line_legs: list[LineLeg]
    pipe_legs: dict[str, PipeLeg]
    line_cuts: list[tuple[np.ndarray, np.ndarray]]
    pipe_cuts: dict[str, tuple[np.ndarray, np.ndarray]]
    free_capacity: bool = False


def _wind(problem: DispatchProblem) -> np.ndarray:
    cap = np.asarray(problem.scenario.farm_capacity_mw)[:, None]
    return cap * problem.day.capacity_factor


def build_dispatch(problem: DispatchProblem, capacity_prices: CapacityPrices | None = None) -> DispatchLP:
    """Assemble the day's LP for the problem's case, scenario and build."""
    case, cat, day = problem.case, problem.catalog, problem.day
    topo = problem.topology
    T, dt = day.hours, day.dt_hours
    wind = _wind(problem)
    lp = LinearProgram()
    n_pts = problem.segments

    cp_e = cat.electrolyzer.energy_intensity_mwh_per_kg
    cp_fc = cat.fuel_cell.energy_yield_mwh_per_kg
    cp_c = cat.compressor.energy_per_kg_mwh

    delivered = [lp.var(f"delivered.t{t}", cost=day.lmp_usd_per_mwh[t] * dt) for t in range(T)]

    # electric legs
    line_legs = problem.line_legs() if topo.lines else []
    line_cuts = []
    line_out: dict[tuple[int, int], int] = {}
    for leg, edge in zip(line_legs, topo.lines):
        k, farm = edge.farm, topo.farms[edge.farm]
        slopes, icpts = line_chords(leg, n_pts)
        line_cuts.append((slopes, icpts))
        for t in range(T):
            hi_in = wind[k, t] if leg.count else 0.0
            j_in = lp.var(f"line_in.{farm}.t{t}", 0.0, hi_in)
            j_out = lp.var(f"line_out.{farm}.t{t}", 0.0, leg.limit_mw)
            line_out[k, t] = j_out
            if leg.count:
                for i, (b, a) in enumerate(zip(slopes, icpts)):
                    lp.constrain(f"line_loss.{farm}.t{t}.s{i}", {j_in: 1.0, j_out: -b}, ">=", leg.count * a)

    if case is CaseId.HVDC:
        for t in range(T):
            row = {delivered[t]: 1.0}
            for k in range(len(topo.farms)):
                row[line_out[k, t]] = -1.0
            lp.constrain(f"substation_balance.t{t}", row, "==", 0.0)
        return DispatchLP(problem, lp, line_legs, {}, line_cuts, {})

    # hydrogen chain
    free = capacity_prices is not None
    sites = topo.electrolyzer_sites
    cap_el = []
    for s_idx, site in enumerate(sites):
        if free:
            hi = (sum(problem.scenario.farm_capacity_mw) if case is CaseId.HYBRID
                  else problem.scenario.farm_capacity_mw[s_idx])
            cap_el.append(lp.var(f"cap_el.{site}", 0.0, hi, -capacity_prices.electrolyzer[s_idx]))
        else:
            cap_el.append(None)

    pipe_legs = problem.pipe_legs()
    pipe_cuts = {name: pipe_chords(leg, n_pts) for name, leg in pipe_legs.items() if leg.count}
    hp_edge = topo.hp_pipe
    hp_leg = pipe_legs[hp_edge.name]
    storage_span = problem.scenario.storage_capacity_kg - problem.scenario.storage_min_kg
    if free:
        fc_hi = cp_fc * (hp_leg.limit_kgph + storage_span / dt)
        cap_fc = lp.var("cap_fc", 0.0, fc_hi, -capacity_prices.fuel_cell)

    def pipe_block(edge, t) -> int:
        leg = pipe_legs[edge.name]
        tag = f"{edge.source}-{edge.target}"
        j_flow = lp.var(f"pipe_flow.{tag}.t{t}", 0.0, leg.limit_kgph)
        if leg.count:
            j_p = lp.var(f"pipe_p_in.{tag}.t{t}", leg.outlet_pressure_bar, leg.max_inlet_pressure_bar)
            slopes, icpts = pipe_cuts[edge.name]
            for i, (b, a) in enumerate(zip(slopes, icpts)):
                lp.constrain(f"pipe_pressure.{tag}.t{t}.s{i}", {j_p: 1.0, j_flow: -b / leg.count}, ">=", a)
        else:
            lp.var(f"pipe_p_in.{tag}.t{t}", leg.outlet_pressure_bar, leg.outlet_pressure_bar)
        return j_flow

    def electrolyzer_block(s_idx, site, t) -> tuple[int, int]:
        hi = np.inf if free else problem.electrolyzer_mw(s_idx)
        j_p = lp.var(f"el_power.{site}.t{t}", 0.0, hi)
        j_h = lp.var(f"el_h2.{site}.t{t}", 0.0)
        lp.constrain(f"el_conv.{site}.t{t}", {j_p: 1.0, j_h: -cp_e}, "==", 0.0)
        if free:
            lp.constrain(f"el_rating.{site}.t{t}", {j_p: 1.0, cap_el[s_idx]: -1.0}, "<=", 0.0)
        return j_p, j_h

    def compressor_block(site, t, j_h_feed) -> tuple[int, int]:
        j_p = lp.var(f"comp_power.{site}.t{t}", 0.0)
        j_h = lp.var(f"comp_h2.{site}.t{t}", 0.0)
        lp.constrain(f"comp_feed.{site}.t{t}", {j_h: 1.0, **{j: -1.0 for j in j_h_feed}}, "==", 0.0)
        lp.constrain(f"comp_conv.{site}.t{t}", {j_p: 1.0, j_h: -cp_c}, "==", 0.0)
        return j_p, j_h

    levels = []
    for t in range(T):
        if case is CaseId.HYBRID:
            j_ep, j_eh = electrolyzer_block(0, HSC, t)
            j_cp, j_ch = compressor_block(HSC, t, [j_eh])
            row = {line_out[k, t]: 1.0 for k in range(len(topo.farms))}
            row.update({j_ep: -1.0, j_cp: -1.0})
            lp.constrain(f"hsc_balance.t{t}", row, ">=", 0.0)
            j_hp = pipe_block(hp_edge, t)
            lp.constrain(f"hsc_h2.t{t}", {j_hp: 1.0, j_ch: -1.0}, "==", 0.0)
        else:
            lp_flows = []
            for edge in topo.lp_pipes:
                k, farm = edge.farm, topo.farms[edge.farm]
                j_ep, j_eh = electrolyzer_block(k, farm, t)
                j_cp, j_ch = compressor_block(farm, t, [j_eh])
                j_f = pipe_block(edge, t)
                lp.constrain(f"farm_h2.{farm}.t{t}", {j_f: 1.0, j_ch: -1.0}, "==", 0.0)
                # the HSC booster is powered through the farm bus that produced the gas
                lp.constrain(f"farm_balance.{farm}.t{t}", {j_ep: 1.0, j_cp: 1.0, j_f: cp_c}, "<=", wind[k, t])
                lp_flows.append(j_f)
            _, j_bh = compressor_block(HSC, t, lp_flows)
            j_hp = pipe_block(hp_edge, t)
            lp.constrain(f"hsc_h2.t{t}", {j_hp: 1.0, j_bh: -1.0}, "==", 0.0)

        # substation: storage and fuel cells
        j_sin = lp.var(f"storage_in.t{t}", 0.0)
        j_sout = lp.var(f"storage_out.t{t}", 0.0)
        j_fh = lp.var(f"fc_h2.t{t}", 0.0)
        j_fp = lp.var(f"fc_power.t{t}", 0.0, np.inf if free else problem.fuel_cell_mw)
        j_lvl = lp.var(f"storage.t{t}", problem.scenario.storage_min_kg, problem.scenario.storage_capacity_kg)
        lp.constrain(f"substation_h2.t{t}", {j_hp: 1.0, j_sout: 1.0, j_sin: -1.0, j_fh: -1.0}, "==", 0.0)
        row = {j_lvl: 1.0, j_sin: -dt, j_sout: dt}
        if levels:
            row[levels[-1]] = -1.0
            lp.constrain(f"storage_level.t{t}", row, "==", 0.0)
        else:
            lp.constrain(f"storage_level.t{t}", row, "==", problem.scenario.storage_initial_kg)
        levels.append(j_lvl)
        lp.constrain(f"fc_conv.t{t}", {j_fp: 1.0, j_fh: -cp_fc}, "==", 0.0)
        if free:
            lp.constrain(f"fc_rating.t{t}", {j_fp: 1.0, cap_fc: -1.0}, "<=", 0.0)
        lp.constrain(f"substation_balance.t{t}", {delivered[t]: 1.0, j_fp: -1.0}, "==", 0.0)

    # cyclic boundary: the representative day must not borrow stored hydrogen
    lp.constrain("storage_cyclic", {levels[-1]: 1.0}, ">=", problem.scenario.storage_initial_kg)
    return DispatchLP(problem, lp, line_legs, pipe_legs, line_cuts, pipe_cuts, free)


# ---------------------------------------------------------------------------
# solution
# ---------------------------------------------------------------------------

@dataclass
class DispatchResult:
    case: CaseId
    delivered_mw: np.ndarray
    storage_kg: np.ndarray
    flows: dict[str, np.ndarray]
    day_revenue_usd: float
    curtailed_mwh: float
    objective: float
    capacities: dict[str, float] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def hours(self) -> int:
        return len(self.delivered_mw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = sorted(self.flows)
        w.writerow(["hour", "delivered_mw", "storage_kg", *keys])
        for t in range(self.hours):
            w.writerow([t, repr(float(self.delivered_mw[t])), repr(float(self.storage_kg[t])),
                        *(repr(float(self.flows[k][t])) for k in keys)])
        return buf.getvalue()


def _infeasibility_suspects(problem: DispatchProblem) -> list[str]:
    s = problem.scenario
    suspects = []
    if not s.storage_min_kg <= s.storage_initial_kg <= s.storage_capacity_kg:
        suspects.append("storage_level.t0 (initial level outside bounds)")
    return suspects or ["storage_cyclic", "storage_level"]


def solve_dispatch(problem: DispatchProblem, capacity_prices: CapacityPrices | None = None,
                   built: DispatchLP | None = None) -> DispatchResult:
    built = built or build_dispatch(problem, capacity_prices)
    lp = built.lp
    try:
        x, objective = lp.solve()
    except LPInfeasible as exc:
        raise DispatchInfeasible(f"dispatch LP infeasible: {exc}", _infeasibility_suspects(problem)) from exc
    except LPUnbounded as exc:
        raise DispatchError(f"internal error: dispatch LP unbounded ({exc})") from exc
    return _map_solution(built, x, objective)


def _map_solution(built: DispatchLP, x: np.ndarray, objective: float) -> DispatchResult:
    problem, lp = built.problem, built.lp
    topo = problem.topology
    T, dt = problem.day.hours, problem.day.dt_hours
    x = np.where(np.abs(x) < 1e-9, 0.0, x)

    def series(prefix: str) -> np.ndarray:
        return np.array([x[lp.index(f"{prefix}.t{t}")] for t in range(T)])

    flows: dict[str, np.ndarray] = {}
    delivered = np.maximum(series("delivered"), 0.0)
    wind = _wind(problem)
    used = np.zeros_like(wind)
    residuals: dict[str, float] = {}

    for leg, edge, (slopes, icpts) in zip(built.line_legs, topo.lines, built.line_cuts):
        farm = topo.farms[edge.farm]
        out = np.maximum(series(f"line_out.{farm}"), 0.0)
        if leg.count:
            # minimum input realising the LP output: the binding chord
            p_in = np.max(slopes[None, :] * out[:, None] + leg.count * icpts[None, :], axis=1)
            p_in = np.clip(p_in, 0.0, None)
        else:
            p_in = np.zeros(T)
        flows[f"line_in.{farm}"] = p_in
        flows[f"line_out.{farm}"] = out
        used[edge.farm] += p_in

    for edge in topo.pipes:
        tag = f"{edge.source}-{edge.target}"
        leg = built.pipe_legs[edge.name]
        h = np.maximum(series(f"pipe_flow.{tag}"), 0.0)
        flows[f"pipe_flow.{tag}"] = h
        if leg.count:
            slopes, icpts = built.pipe_cuts[edge.name]
            p = np.max(slopes[None, :] / leg.count * h[:, None] + icpts[None, :], axis=1)
            flows[f"pipe_p_in.{tag}"] = np.maximum(p, leg.outlet_pressure_bar)
        else:
            flows[f"pipe_p_in.{tag}"] = np.full(T, leg.outlet_pressure_bar)

    storage = np.zeros(T) + problem.scenario.storage_initial_kg
    capacities: dict[str, float] = {}
    hsc_surplus = 0.0
    if problem.case is not CaseId.HVDC:
        for site in topo.electrolyzer_sites:
            flows[f"el_power.{site}"] = np.maximum(series(f"el_power.{site}"), 0.0)
            flows[f"el_h2.{site}"] = np.maximum(series(f"el_h2.{site}"), 0.0)
        for site in topo.compressor_sites:
            flows[f"comp_power.{site}"] = np.maximum(series(f"comp_power.{site}"), 0.0)
            flows[f"comp_h2.{site}"] = np.maximum(series(f"comp_h2.{site}"), 0.0)
        fc_h2 = np.maximum(series("fc_h2"), 0.0)
        hp_tag = f"{HSC}-{SUBSTATION}"
        net = flows[f"pipe_flow.{hp_tag}"] - fc_h2
        flows["storage_in"] = np.maximum(net, 0.0)
        flows["storage_out"] = np.maximum(-net, 0.0)
        flows["fc_h2"] = fc_h2
        flows["fc_power"] = np.maximum(series("fc_power"), 0.0)
        storage = series("storage")
        if problem.case is CaseId.HYBRID:
            arriving = sum(flows[f"line_out.{f}"] for f in topo.farms)
            surplus = arriving - flows[f"el_power.{HSC}"] - flows[f"comp_power.{HSC}"]
            hsc_surplus = float(np.sum(np.maximum(surplus, 0.0)) * dt)
        else:
            cp_c = problem.catalog.compressor.energy_per_kg_mwh
            for edge in topo.lp_pipes:
                farm = topo.farms[edge.farm]
                used[edge.farm] += (flows[f"el_power.{farm}"] + flows[f"comp_power.{farm}"]
                                    + cp_c * flows[f"pipe_flow.{farm}-{HSC}"])
        if built.free_capacity:
            for site in topo.electrolyzer_sites:
                capacities[f"electrolyzer.{site}"] = float(x[lp.index(f"cap_el.{site}")])
            capacities["fuel_cell"] = float(x[lp.index("cap_fc")])

    curtailed = float(np.sum(np.maximum(wind - used, 0.0)) * dt) + hsc_surplus
    revenue = float(np.dot(problem.day.lmp_usd_per_mwh, delivered) * dt)
    result = DispatchResult(problem.case, delivered, storage, flows, revenue, curtailed, float(objective),
                            capacities)
    result.residuals = quadratic_residuals(result, built)
    return result


def quadratic_residuals(result: DispatchResult, built: DispatchLP) -> dict[str, float]:
    """Largest gap between reported and exact quadratic relations, per leg."""
    topo = built.problem.topology
    out = {}
    for leg, edge in zip(built.line_legs, topo.lines):
        farm = topo.farms[edge.farm]
        if leg.count == 0:
            out[f"line.{farm}"] = 0.0
            continue
        exact = np.array([hvdc_send(leg, p) for p in result.flows[f"line_out.{farm}"]])
        out[f"line.{farm}"] = float(np.max(result.flows[f"line_in.{farm}"] - exact))
    for edge in topo.pipes:
        tag = f"{edge.source}-{edge.target}"
        leg = built.pipe_legs[edge.name]
        if leg.count == 0:
            out[f"pipe.{tag}"] = 0.0
            continue
        exact = np.array([pipeline_inlet_pressure(leg, h, check_limit=False)
                          for h in result.flows[f"pipe_flow.{tag}"]])
        out[f"pipe.{tag}"] = float(np.max(result.flows[f"pipe_p_in.{tag}"] - exact))
    return out


@dataclass
class TightnessReport:
    max_residual: dict[str, float]
    bound: dict[str, float]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_tightness(result: DispatchResult, problem: DispatchProblem, *, rel_tol: float = 1e-9) -> TightnessReport:
    """Check that every hour's relaxed loss sits within the analytic chord gap of the exact curve.

    A negative residual would mean a physically infeasible flow (the relaxation
    under-estimated a loss); a residual above the bound means the LP left slack.
    """
    topo = problem.topology
    legs = problem.line_legs() if topo.lines else []
    pipes = problem.pipe_legs() if topo.pipes else {}
    worst, bounds, bad = {}, {}, []

    def check(key, reported, exact, bound):
        resid = np.asarray(reported) - np.asarray(exact)
        slack = rel_tol * max(1.0, float(np.max(np.abs(exact), initial=0.0)))
        worst[key] = float(np.max(np.abs(resid), initial=0.0))
        bounds[key] = bound
        for t, r in enumerate(resid):
            if r < -slack:
                bad.append(f"{key} hour {t}: relaxed value below exact curve by {-r:.3e}")
            elif r > bound + slack:
                bad.append(f"{key} hour {t}: residual {r:.3e} exceeds chord-gap bound {bound:.3e}")

    for leg, edge in zip(legs, topo.lines):
        farm = topo.farms[edge.farm]
        out = result.flows[f"line_out.{farm}"]
        exact = [hvdc_send(leg, p) if leg.count else 0.0 for p in out]
        check(f"line.{farm}", result.flows[f"line_in.{farm}"], exact, line_gap_bound(leg, problem.segments))
    for edge in topo.pipes:
        tag = f"{edge.source}-{edge.target}"
        leg = pipes[edge.name]
        h = result.flows[f"pipe_flow.{tag}"]
        exact = [pipeline_inlet_pressure(leg, v, check_limit=False) if leg.count else leg.outlet_pressure_bar
                 for v in h]
        check(f"pipe.{tag}", result.flows[f"pipe_p_in.{tag}"], exact, pipe_gap_bound(leg, problem.segments))
    return TightnessReport(worst, bounds, bad)


def node_balance_residuals(result: DispatchResult, problem: DispatchProblem) -> np.ndarray:
    """Per-hour worst energy-balance residual (MW) over all electric nodes.

    Farm: wind = line/electrolysis input + curtailment; line: input*eta = output
    + loss; HSC: arrivals = electrolysis + compression + spill; substation:
    delivered = sum of arrivals or fuel-cell output.
    """
    topo = problem.topology
    T = problem.day.hours
    wind = _wind(problem)
    legs = problem.line_legs() if topo.lines else []
    worst = np.zeros(T)
    f = result.flows
    for leg, edge in zip(legs, topo.lines):
        farm = topo.farms[edge.farm]
        p_in, p_out = f[f"line_in.{farm}"], f[f"line_out.{farm}"]
        worst = np.maximum(worst, np.maximum(p_in - wind[edge.farm], 0.0))
        if leg.count:
            # chord loss = eta*P_in - P_out must be nonnegative and at least the exact loss
            loss_exact = leg.loss_factor * p_out**2
            loss_relaxed = leg.converter_eff * p_in - p_out
            worst = np.maximum(worst, np.maximum(loss_exact - loss_relaxed, 0.0))
    if problem.case is CaseId.HVDC:
        arrivals = sum(f[f"line_out.{fm}"] for fm in topo.farms)
        return np.maximum(worst, np.abs(result.delivered_mw - arrivals))
    cat = problem.catalog
    cp_e, cp_c = cat.electrolyzer.energy_intensity_mwh_per_kg, cat.compressor.energy_per_kg_mwh
    if problem.case is CaseId.HYBRID:
        arrivals = sum(f[f"line_out.{fm}"] for fm in topo.farms)
        demand = f[f"el_power.{HSC}"] + f[f"comp_power.{HSC}"]
        worst = np.maximum(worst, np.maximum(demand - arrivals, 0.0))
        worst = np.maximum(worst, np.abs(f[f"el_power.{HSC}"] - cp_e * f[f"el_h2.{HSC}"]))
    else:
        for edge in topo.lp_pipes:
            farm = topo.farms[edge.farm]
            demand = f[f"el_power.{farm}"] + f[f"comp_power.{farm}"] + cp_c * f[f"pipe_flow.{farm}-{HSC}"]
            worst = np.maximum(worst, np.maximum(demand - wind[edge.farm], 0.0))
            worst = np.maximum(worst, np.abs(f[f"el_power.{farm}"] - cp_e * f[f"el_h2.{farm}"]))
    fc = cat.fuel_cell.energy_yield_mwh_per_kg * f["fc_h2"]
    worst = np.maximum(worst, np.abs(f["fc_power"] - fc))
    return np.maximum(worst, np.abs(result.delivered_mw - f["fc_power"]))


def hydrogen_balance_residual(result: DispatchResult, problem: DispatchProblem) -> float:
    """Worst storage mass-balance residual (kg) over the day."""
    if problem.case is CaseId.HVDC:
        return 0.0
    f = result.flows
    dt = problem.day.dt_hours
    prev = np.concatenate([[problem.scenario.storage_initial_kg], result.storage_kg[:-1]])
    expected = prev + dt * (f["storage_in"] - f["storage_out"])
    return float(np.max(np.abs(result.storage_kg - expected)))


def validated_problem(case, scenario, catalog, sizing, day, segments: int = 10) -> DispatchProblem:
    validate_scenario(scenario, catalog, day)
    return DispatchProblem(CaseId.parse(case), scenario, catalog, sizing, day, segments)


def lp_debug_dump(problem: DispatchProblem) -> str:
    return build_dispatch(problem).lp.to_lp_format()


def summarize(result: DispatchResult) -> dict:
    return {
        "case": result.case.value,
        "day_revenue_usd": result.day_revenue_usd,
        "delivered_mwh": float(np.sum(result.delivered_mw)),
        "curtailed_mwh": result.curtailed_mwh,
        "peak_delivered_mw": float(np.max(result.delivered_mw, initial=0.0)),
        "storage_min_kg": float(np.min(result.storage_kg)),
        "storage_max_kg": float(np.max(result.storage_kg)),
    }

