import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windlink.model import GasProperties
from windlink.physics import (ConvergenceError, InfeasibleFlowError, LineLeg, PhysicsError, PipeLeg, StorageBoundError,
                              StorageState, colebrook_residual, compressibility, compressor_power, electrolyzer_power,
                              friction_factor, fuel_cell_power, gas_properties, hvdc_receive, hvdc_send,
                              pipeline_inlet_pressure, pipeline_max_flow, storage_step)


def leg(d=10.0, r=0.01, v=320.0, eta=0.95, n=1, p_lim=1e9):
    return LineLeg(d, r, v, eta, n, p_lim)


def unit_gas(flow_group=0.4536):
    # lambda*Z*T/rho == flow_group with lambda = 0.01, Z = 1
    return GasProperties(0.01, 1.0, 288.15, 0.01 * 288.15 / flow_group, 1.5e-5, 8.9e-6)


def pipe(d=10.0, diameter=1.0, p_out=70.0, p_max=200.0, n=1, h_lim=1e9, gas=None):
    return PipeLeg(d, diameter, p_out, p_max, n, h_lim, gas or unit_gas())


# --- HVDC ----------------------------------------------------------------------

def test_hvdc_zero_input():
    assert hvdc_receive(leg(), 0.0) == 0.0


def test_hvdc_lossless():
    assert hvdc_receive(leg(r=0.0), 100.0) == pytest.approx(95.0, abs=1e-12)


def test_hvdc_worked_example():
    p = hvdc_receive(leg(), 100.0)
    assert p == pytest.approx(87.52, abs=0.01)
    # substituting the root back into the loss relation
    assert 0.95 * 100 - p - 1000 * (p / 320) ** 2 * 10 * 0.01 == pytest.approx(0.0, abs=1e-9)


def test_hvdc_cap_and_errors():
    assert hvdc_receive(leg(r=0.0, p_lim=50.0), 100.0) == 50.0
    assert hvdc_receive(leg(r=0.0, p_lim=50.0, n=3), 100.0) == 95.0
    with pytest.raises(PhysicsError):
        hvdc_receive(leg(), -1.0)
    with pytest.raises(PhysicsError):
        hvdc_receive(leg(n=0), 1.0)
    with pytest.raises(PhysicsError):
        hvdc_send(leg(n=0), 1.0)


lines = st.builds(leg, d=st.floats(1, 1000), r=st.floats(0, 0.1), v=st.floats(100, 800),
                  eta=st.floats(0.8, 1.0), n=st.integers(1, 6))


@given(lines, st.floats(0, 5000))
def test_hvdc_root_residual(lg, p_in):
    p = hvdc_receive(lg, p_in)
    resid = lg.converter_eff * p_in - p - lg.loss_factor * p * p
    assert abs(resid) < 1e-9 * max(1.0, p_in)
    assert 0.0 <= p <= lg.converter_eff * p_in + 1e-12


@given(lines, st.floats(0, 5000))
def test_hvdc_send_inverts_receive(lg, p_in):
    assert hvdc_send(lg, hvdc_receive(lg, p_in)) == pytest.approx(p_in, rel=1e-9, abs=1e-12)


@given(lines, st.floats(0, 5000), st.floats(0, 5000))
def test_hvdc_monotone(lg, a, b):
    lo, hi = sorted((a, b))
    assert hvdc_receive(lg, lo) <= hvdc_receive(lg, hi)


# --- conversion devices ---------------------------------------------------------

@pytest.mark.parametrize("fn,rate,flow,expected", [
    (electrolyzer_power, 0.05, 1000, 50.0),
    (electrolyzer_power, 0.0527, 2000, 105.4),
    (fuel_cell_power, 0.019868, 1000, 19.868),
    (fuel_cell_power, 0.035, 2000, 70.0),
    (compressor_power, 0.002, 500, 1.0),
    (compressor_power, 0.002, 0, 0.0),
])
def test_linear_devices(fn, rate, flow, expected):
    assert fn(rate, flow) == pytest.approx(expected)


def test_linear_devices_reject_negative_and_scale():
    for fn in (electrolyzer_power, fuel_cell_power, compressor_power):
        with pytest.raises(PhysicsError):
            fn(0.05, -1.0)
    assert compressor_power(0.002, 1000) == 2 * compressor_power(0.002, 500)


# --- friction and compressibility ---------------------------------------------------

@pytest.mark.parametrize("re,rr,expected", [(1e6, 0.0, 0.01165), (1e12, 2e-4, 0.01373), (1e5, 1e-3, 0.02217)])
def test_friction_examples(re, rr, expected):
    assert friction_factor(re, rr) == pytest.approx(expected, abs=1e-4)


def test_friction_rough_asymptote():
    x = -2 * math.log10(2e-4 / 3.7)
    assert friction_factor(1e12, 2e-4) == pytest.approx(1 / x**2, rel=1e-6)


def test_friction_residual_grid():
    worst = 0.0
    for re in np.logspace(4, 9, 26):
        for rr in np.concatenate([[0.0], np.logspace(-6, math.log10(5e-2), 20)]):
            worst = max(worst, abs(colebrook_residual(friction_factor(re, rr), re, rr)))
    assert worst < 1e-8


def test_friction_rejects_laminar_and_reports_nonconvergence():
    with pytest.raises(PhysicsError, match="not turbulent"):
        friction_factor(2000, 1e-4)
    with pytest.raises(ConvergenceError) as exc:
        friction_factor(1e6, 1e-4, max_iter=1)
    assert exc.value.residual > 0


@pytest.mark.parametrize("p,z", [(0, 1.0), (100, 1.064), (50, 1.032)])
def test_compressibility(p, z):
    assert compressibility(p) == pytest.approx(z, abs=1e-12)


def test_compressibility_negative():
    with pytest.raises(PhysicsError):
        compressibility(-1)


def test_gas_properties_default_classes(catalog):
    for spec in (catalog.pipeline_lp, catalog.pipeline_hp):
        g = gas_properties(catalog.gas, spec)
        assert 0.005 < g.friction < 0.1
        assert g.compressibility >= 1


# --- pipelines -----------------------------------------------------------------------

def test_pipe_zero_flow():
    assert pipeline_inlet_pressure(pipe(), 0.0) == 70.0


def test_pipe_worked_example():
    assert pipeline_inlet_pressure(pipe(), 1.0) == pytest.approx(166.2, abs=0.1)
    expected = math.sqrt(4900 + 5007.7 * 0.4536 * 10)
    assert pipeline_inlet_pressure(pipe(), 1.0) == pytest.approx(expected, rel=1e-12)


def test_pipe_max_flow_example():
    p_max = pipeline_inlet_pressure(pipe(), 1.0)
    assert pipeline_max_flow(pipe(p_max=p_max)) == pytest.approx(1.0, rel=1e-9)
    assert pipeline_max_flow(pipe(p_max=166.2)) == pytest.approx(1.0, abs=1e-3)


def test_pipe_quadratic_and_scaling():
    lg = pipe(p_max=1000.0)
    dp = lambda h: pipeline_inlet_pressure(lg, h) ** 2 - 70.0**2
    assert dp(4.0) == pytest.approx(16 * dp(1.0), rel=1e-12)
    assert pipeline_max_flow(pipe(d=5.0)) == pytest.approx(math.sqrt(2) * pipeline_max_flow(pipe()), rel=1e-12)
    assert pipeline_max_flow(pipe(p_max=70.0)) == 0.0


def test_pipe_errors():
    with pytest.raises(InfeasibleFlowError):
        pipeline_inlet_pressure(pipe(p_max=100.0), 1.0)
    with pytest.raises(PhysicsError):
        pipeline_inlet_pressure(pipe(n=0), 1.0)
    with pytest.raises(PhysicsError):
        pipeline_max_flow(pipe(d=0.0))


def test_pipe_limit_uses_tighter_of_rating_and_hydraulics():
    lg = pipe(h_lim=0.5, n=2)
    assert lg.per_pipe_limit_kgph == 0.5
    assert lg.limit_kgph == 1.0
    assert pipe(h_lim=1e9).per_pipe_limit_kgph == pytest.approx(pipeline_max_flow(pipe()))


pipes = st.builds(pipe, d=st.floats(1, 500), diameter=st.floats(100, 1000), p_out=st.floats(10, 80),
                  p_max=st.floats(81, 200), n=st.integers(1, 5),
                  gas=st.builds(unit_gas, st.floats(0.05, 2.0)))


@given(pipes)
def test_pipe_inversion_round_trip(lg):
    h = pipeline_max_flow(lg)
    assert pipeline_inlet_pressure(lg, h * lg.count) == pytest.approx(lg.max_inlet_pressure_bar, rel=1e-6)


@given(pipes, st.floats(0, 1), st.floats(0, 1))
def test_pipe_pressure_monotone(lg, a, b):
    lo, hi = sorted((a, b))
    top = pipeline_max_flow(lg) * lg.count
    assert pipeline_inlet_pressure(lg, lo * top) <= pipeline_inlet_pressure(lg, hi * top)


# --- storage ---------------------------------------------------------------------

def test_storage_step_examples():
    s = StorageState(100.0, 0.0, 1000.0)
    assert storage_step(s, 10, 5).level_kg == 105.0
    assert storage_step(s, 7, 7).level_kg == 100.0
    with pytest.raises(StorageBoundError) as exc:
        storage_step(replace(s, level_kg=1000.0), 1, 0)
    assert exc.value.direction == "overflow" and exc.value.magnitude_kg == pytest.approx(1.0)
    with pytest.raises(StorageBoundError, match="underflow"):
        storage_step(s, 0, 101)


@settings(max_examples=200)
@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=24), st.randoms(use_true_random=False))
def test_storage_zero_net_drift(amounts, rnd):
    # charge each amount, then discharge the same amounts in shuffled order
    s0 = StorageState(2e5, 0.0, 1e9)
    s = s0
    for a in amounts:
        s = storage_step(s, a, 0.0)
    out = list(amounts)
    rnd.shuffle(out)
    for a in out:
        s = storage_step(s, 0.0, a)
    assert abs(s.level_kg - s0.level_kg) < 1e-9


def test_storage_balanced_steps_are_exact():
    s = StorageState(123456.789, 0.0, 4e5)
    for h in np.linspace(0, 5e4, 37):
        s = storage_step(s, h, h)
    assert s.level_kg == 123456.789


def test_kernels_are_pure():
    lg = leg()
    assert hvdc_receive(lg, 123.4) == hvdc_receive(lg, 123.4)
    assert friction_factor(3e5, 1e-4) == friction_factor(3e5, 1e-4)
