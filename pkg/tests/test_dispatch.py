from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from windlink.dispatch import (DispatchInfeasible, DispatchProblem, build_dispatch, chords, hydrogen_balance_residual,
                               line_gap_bound, lp_debug_dump, node_balance_residuals, pipe_gap_bound, solve_dispatch,
                               verify_tightness)
from windlink.model import CaseId, DayProfile, SizingDecision
from windlink.physics import hvdc_send

from conftest import flat_day, one_farm, with_line
from oracle import hvdc_revenue, hydrogen_revenue

BASE_BUILD = {
    CaseId.HVDC: SizingDecision((1, 1, 1), (0, 0, 0)),
    CaseId.HYBRID: SizingDecision((1, 1, 1), (0, 0, 0), 1, (4000,), 4000),
    CaseId.HP: SizingDecision((0, 0, 0), (2, 2, 2), 1, (1500, 1500, 1500), 4000),
}


def toy_catalog(catalog, rte=0.7):
    return replace(catalog, fuel_cell=replace(
        catalog.fuel_cell, energy_yield_mwh_per_kg=rte * catalog.electrolyzer.energy_intensity_mwh_per_kg))


def toy_instance(case, seed, catalog):
    """Random 6-hour single-farm problem sized so every limit can bind."""
    rng = np.random.default_rng(seed)
    cap = rng.uniform(200, 800)
    tank = cap / catalog.electrolyzer.energy_intensity_mwh_per_kg
    s = replace(one_farm(cap, rng.uniform(100, 500), rng.uniform(50, 150), rng.uniform(100, 300)),
                storage_capacity_kg=tank, storage_initial_kg=0.5 * tank)
    c = with_line(toy_catalog(catalog), p_lim_mw=rng.uniform(0.4, 1.0) * cap)
    day = flat_day(rng.uniform(0, 1, 6), rng.uniform(10, 100, 6))
    el = int(rng.uniform(0.3, 1.0) * cap / c.electrolyzer.rated_mw)
    fc = int(rng.uniform(0.2, 0.8) * cap / c.fuel_cell.rated_mw)
    d = {
        CaseId.HVDC: SizingDecision((int(rng.integers(1, 3)),), (0,)),
        CaseId.HYBRID: SizingDecision((int(rng.integers(1, 3)),), (0,), 1, (el,), fc),
        CaseId.HP: SizingDecision((0,), (1,), 1, (el,), fc),
    }[case]
    return DispatchProblem(case, s, c, d, day)


@pytest.mark.parametrize("case", list(CaseId))
def test_matches_brute_force_oracle(case, catalog):
    oracle = hvdc_revenue if case is CaseId.HVDC else hydrogen_revenue
    for seed in range(20):
        p = toy_instance(case, seed, catalog)
        lp = solve_dispatch(p).day_revenue_usd
        ref = oracle(p)
        assert lp == pytest.approx(ref, rel=0.01), f"seed {seed}"


def test_hp_price_step_example(catalog):
    c = toy_catalog(catalog)
    tank = 500 / c.electrolyzer.energy_intensity_mwh_per_kg
    s = replace(one_farm(500.0), storage_capacity_kg=tank, storage_initial_kg=0.5 * tank)
    day = flat_day([0.8] * 6, [10, 10, 10, 100, 100, 100])
    p = DispatchProblem(CaseId.HP, s, c, SizingDecision((0,), (1,), 1, (1600,), 4000), day)
    r = solve_dispatch(p)
    assert r.day_revenue_usd == pytest.approx(hydrogen_revenue(p), rel=0.01)
    # fuel cells run harder in the expensive hours
    assert r.delivered_mw[3:].sum() > r.delivered_mw[:3].sum()


def test_lossless_hvdc_closed_form(scenario, catalog):
    c = with_line(catalog, resistance_ohm_per_km=0.0, converter_eff=1.0, p_lim_mw=1000.0)
    day = DayProfile(np.ones((3, 24)), np.full(24, 50.0))
    r = solve_dispatch(DispatchProblem(CaseId.HVDC, scenario, c, BASE_BUILD[CaseId.HVDC], day))
    assert r.day_revenue_usd == pytest.approx(50 * 2160 * 24, rel=1e-9)
    assert r.curtailed_mwh == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("case", [CaseId.HYBRID, CaseId.HP])
def test_zero_wind_day(case, scenario, catalog):
    day = DayProfile(np.zeros((3, 24)), np.full(24, 50.0))
    r = solve_dispatch(DispatchProblem(case, scenario, catalog, BASE_BUILD[case], day))
    assert r.day_revenue_usd == pytest.approx(0.0, abs=1e-6)
    np.testing.assert_allclose(r.storage_kg, scenario.storage_initial_kg, atol=1e-6)


def test_zero_build_gives_zero(scenario, catalog, day):
    for case in CaseId:
        r = solve_dispatch(DispatchProblem(case, scenario, catalog, SizingDecision.zero(case, 3), day))
        assert r.day_revenue_usd == 0.0


def test_lp_structure(scenario, catalog, day):
    hv = build_dispatch(DispatchProblem(CaseId.HVDC, scenario, catalog, BASE_BUILD[CaseId.HVDC], day)).lp
    assert len(hv.block("line_in.")) == 3 * 24
    assert not hv.block("el_") and not hv.block("storage")
    hp = build_dispatch(DispatchProblem(CaseId.HP, one_farm(), catalog,
                                        SizingDecision((0,), (1,), 1, (100,), 100), flat_day([0.5] * 24, [50] * 24))).lp
    for prefix in ("el_power.", "comp_power.farm1", "comp_power.hsc", "pipe_flow.farm1-hsc", "pipe_flow.hsc-substation",
                   "storage.", "fc_power."):
        assert hp.block(prefix), prefix
    assert not hp.block("line_in.")


@pytest.mark.parametrize("case", list(CaseId))
def test_balances_and_tightness(case, scenario, catalog, day):
    p = DispatchProblem(case, scenario, catalog, BASE_BUILD[case], day)
    r = solve_dispatch(p)
    assert np.max(np.abs(node_balance_residuals(r, p)), initial=0.0) < 1e-6
    assert hydrogen_balance_residual(r, p) < 1e-6
    report = verify_tightness(r, p)
    assert report.ok, report.violations
    if case is not CaseId.HVDC:
        assert r.storage_kg[-1] >= scenario.storage_initial_kg - 1e-6
        assert np.all(r.storage_kg <= scenario.storage_capacity_kg + 1e-6)


def test_coarser_relaxation_is_a_lower_bound(scenario, catalog, day):
    for case in CaseId:
        fine = solve_dispatch(DispatchProblem(case, scenario, catalog, BASE_BUILD[case], day, segments=10))
        coarse = solve_dispatch(DispatchProblem(case, scenario, catalog, BASE_BUILD[case], day, segments=2))
        assert coarse.day_revenue_usd <= fine.day_revenue_usd * (1 + 1e-9)


def test_chords_interpolate_sample_points():
    slopes, icpts = chords(lambda x: x * x, 4.0, 5)
    xs = np.linspace(0, 4, 5)
    top = np.max(slopes[None, :] * xs[:, None] + icpts[None, :], axis=1)
    np.testing.assert_allclose(top, xs**2, atol=1e-12)


def test_gap_bound_quarters_when_segments_double(catalog):
    leg = DispatchProblem(CaseId.HVDC, one_farm(), catalog, SizingDecision((1,), (0,)),
                          flat_day([0.5], [50])).line_legs()[0]
    b10, b19 = line_gap_bound(leg, 10), line_gap_bound(leg, 19)
    assert b19 <= 0.5 * b10
    # the bound is attained at a midpoint of the first chord
    slopes, icpts = chords(lambda p: hvdc_send(leg, p), leg.p_lim_mw, 10)
    x = 0.5 * leg.p_lim_mw / 9
    assert slopes[0] * x + icpts[0] - hvdc_send(leg, x) == pytest.approx(b10, rel=1e-6)


def test_pipe_gap_bound_covers_sampled_gap(catalog):
    p = DispatchProblem(CaseId.HP, one_farm(), catalog, SizingDecision((0,), (1,), 1, (1,), 1), flat_day([0.5], [50]))
    from windlink.dispatch import pipe_chords
    from windlink.physics import pipeline_inlet_pressure
    for leg in p.pipe_legs().values():
        slopes, icpts = pipe_chords(leg, 10)
        xs = np.linspace(0, leg.per_pipe_limit_kgph, 2001)
        gap = np.max(slopes[None, :] * xs[:, None] + icpts[None, :], axis=1) - [
            pipeline_inlet_pressure(leg, x, check_limit=False) for x in xs]
        assert gap.max() <= pipe_gap_bound(leg, 10) * (1 + 1e-9)
        assert gap.min() >= -1e-9


def test_hvdc_invariant_to_hydrogen_parameters(scenario, catalog, day):
    p = DispatchProblem(CaseId.HVDC, scenario, catalog, BASE_BUILD[CaseId.HVDC], day)
    other = replace(catalog, electrolyzer=replace(catalog.electrolyzer, energy_intensity_mwh_per_kg=0.04),
                    fuel_cell=replace(catalog.fuel_cell, energy_yield_mwh_per_kg=0.03, capex_per_unit=1.0),
                    pipeline_hp=replace(catalog.pipeline_hp, diameter_mm=900.0))
    a = solve_dispatch(p).day_revenue_usd
    b = solve_dispatch(replace(p, catalog=other)).day_revenue_usd
    assert a == b


def test_deterministic(scenario, catalog, day):
    p = DispatchProblem(CaseId.HYBRID, scenario, catalog, BASE_BUILD[CaseId.HYBRID], day)
    assert solve_dispatch(p).to_csv() == solve_dispatch(p).to_csv()


def test_infeasible_reports_binding(scenario, catalog, day):
    bad = replace(scenario, storage_initial_kg=5e5)
    with pytest.raises(DispatchInfeasible) as exc:
        solve_dispatch(DispatchProblem(CaseId.HYBRID, bad, catalog, BASE_BUILD[CaseId.HYBRID], day))
    assert exc.value.binding


def test_problem_rejects_bad_shapes(scenario, catalog, day):
    with pytest.raises(ValueError):
        DispatchProblem(CaseId.HP, scenario, catalog, BASE_BUILD[CaseId.HYBRID], day)
    with pytest.raises(ValueError):
        DispatchProblem(CaseId.HVDC, scenario, catalog, BASE_BUILD[CaseId.HVDC], day, segments=1)


def test_csv_and_lp_dump(scenario, catalog, day):
    p = DispatchProblem(CaseId.HYBRID, scenario, catalog, BASE_BUILD[CaseId.HYBRID], day)
    text = solve_dispatch(p).to_csv()
    header = text.splitlines()[0].split(",")
    assert header[:3] == ["hour", "delivered_mw", "storage_kg"]
    assert len(text.splitlines()) == 25
    dump = lp_debug_dump(p)
    assert dump.startswith("\\") and "Maximize" in dump and "Subject To" in dump and dump.rstrip().endswith("End")


# --- properties ----------------------------------------------------------------------

SLOW = settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@SLOW
@given(st.sampled_from([CaseId.HYBRID, CaseId.HP]), st.integers(0, 10_000),
       st.sampled_from(["lines", "pipes", "el", "fc"]))
def test_revenue_monotone_in_sizing(catalog, case, seed, part):
    p = toy_instance(case, seed, catalog)
    d = p.sizing
    bigger = {
        "lines": replace(d, lines_per_farm=tuple(n + 1 for n in d.lines_per_farm)) if case is CaseId.HYBRID else d,
        "pipes": replace(d, hp_pipes=d.hp_pipes + 1),
        "el": replace(d, electrolyzers_per_site=tuple(n + 200 for n in d.electrolyzers_per_site)),
        "fc": replace(d, fuel_cells=d.fuel_cells + 200),
    }[part]
    base = solve_dispatch(p).day_revenue_usd
    grown = solve_dispatch(replace(p, sizing=bigger)).day_revenue_usd
    assert grown >= base * (1 - 1e-9) - 1e-6


@SLOW
@given(st.sampled_from([CaseId.HYBRID, CaseId.HP]), st.integers(0, 10_000), st.floats(0.3, 0.6), st.floats(0.01, 0.3))
def test_revenue_monotone_in_fuel_cell_yield(catalog, case, seed, rte, step):
    p = toy_instance(case, seed, catalog)
    lo = solve_dispatch(replace(p, catalog=toy_catalog(p.catalog, rte))).day_revenue_usd
    hi = solve_dispatch(replace(p, catalog=toy_catalog(p.catalog, rte + step))).day_revenue_usd
    assert hi >= lo * (1 - 1e-9) - 1e-6


@SLOW
@given(st.sampled_from(list(CaseId)), st.integers(0, 10_000))
def test_toy_balances(catalog, case, seed):
    p = toy_instance(case, seed, catalog)
    r = solve_dispatch(p)
    assert np.max(np.abs(node_balance_residuals(r, p)), initial=0.0) < 1e-6
    assert verify_tightness(r, p).ok
