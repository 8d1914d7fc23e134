"""Physical kernels: HVDC losses, conversion devices, pipeline hydraulics, storage.

Unit convention
---------------
Power in MW, voltage in kV, line resistance per km, distance in km, hydrogen
flow in kg/h, pressure in bar, pipe diameter in mm. The two lumped
coefficients (``loss_coeff`` = 1000 for line losses and ``weymouth_coeff`` =
5007.7 for the squared-pressure drop) are kept as configurable constants;
changing them rescales results without reshaping them.

With the diameter in mm and the gas density taken at normal conditions
(0.0899 kg/m3) the pressure-drop coefficient lands within about 8% of the
isothermal Darcy gas-flow law, which is why those two units were chosen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .model import GasProperties, GasSpec, LineSpec, PipelineSpec

COLEBROOK_TOL = 1e-8
STORAGE_TOL_KG = 1e-9


class PhysicsError(ValueError):
    pass


class ConvergenceError(PhysicsError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class InfeasibleFlowError(PhysicsError):
    pass


class StorageBoundError(PhysicsError):
    def __init__(self, direction: str, magnitude_kg: float):
        super().__init__(f"storage {direction} by {magnitude_kg:.6g} kg")
        self.direction = direction
        self.magnitude_kg = magnitude_kg


# ---------------------------------------------------------------------------
# HVDC lines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LineLeg:
    distance_km: float
    resistance_ohm_per_km: float
    voltage_kv: float
    converter_eff: float
    count: int
    p_lim_mw: float
    loss_coeff: float = 1000.0

    @classmethod
    def from_spec(cls, spec: LineSpec, distance_km: float, count: int, loss_coeff: float = 1000.0) -> "LineLeg":
        return cls(distance_km, spec.resistance_ohm_per_km, spec.voltage_kv, spec.converter_eff,
                   count, spec.p_lim_mw, loss_coeff)

    @property
    def loss_factor(self) -> float:
        """c in ``eta*P_in - P_out = c*P_out**2`` for the whole bundle of lines."""
        if self.count == 0:
            return math.inf
        return self.loss_coeff * self.distance_km * self.resistance_ohm_per_km / (self.count * self.voltage_kv**2)

    @property
    def limit_mw(self) -> float:
        return self.count * self.p_lim_mw


def hvdc_receive(leg: LineLeg, p_in_mw: float) -> float:
    """Receiving-end power for ``p_in_mw`` injected at the sending end.

    Positive root of ``c*P**2 + P - eta*P_in = 0``, capped at the bundle limit.
    """
    if p_in_mw < 0:
        raise PhysicsError(f"negative line input {p_in_mw}")
    if p_in_mw == 0:
        return 0.0
    if leg.count < 1:
        raise PhysicsError("positive line input with zero lines")
    sent = leg.converter_eff * p_in_mw
    c = leg.loss_factor
    # rationalised root avoids cancellation when c*sent is small
    p_out = 2.0 * sent / (1.0 + math.sqrt(1.0 + 4.0 * c * sent))
    return min(p_out, leg.limit_mw)


def hvdc_send(leg: LineLeg, p_out_mw: float) -> float:
    """Sending-end input needed to deliver ``p_out_mw``."""
    if p_out_mw < 0:
        raise PhysicsError(f"negative line output {p_out_mw}")
    if p_out_mw == 0:
        return 0.0
    if leg.count < 1:
        raise PhysicsError("positive line output with zero lines")
    return (p_out_mw + leg.loss_factor * p_out_mw**2) / leg.converter_eff


# ---------------------------------------------------------------------------
# conversion devices
# ---------------------------------------------------------------------------

def _linear(rate: float, flow: float, what: str) -> float:
    if flow < 0:
        raise PhysicsError(f"negative {what} flow {flow}")
    return rate * flow


def electrolyzer_power(cp_e: float, h_out_kgph: float) -> float:
    return _linear(cp_e, h_out_kgph, "electrolyzer")


def fuel_cell_power(cp_fc: float, h_in_kgph: float) -> float:
    return _linear(cp_fc, h_in_kgph, "fuel cell")


def compressor_power(cp_c: float, h_kgph: float) -> float:
    return _linear(cp_c, h_kgph, "compressor")


# ---------------------------------------------------------------------------
# gas properties
# ---------------------------------------------------------------------------

def _colebrook_rhs(x: float, reynolds: float, relative_roughness: float) -> float:
    return -2.0 * math.log10(relative_roughness / 3.7 + 2.51 * x / reynolds)


def colebrook_residual(friction: float, reynolds: float, relative_roughness: float) -> float:
    x = 1.0 / math.sqrt(friction)
    return x - _colebrook_rhs(x, reynolds, relative_roughness)


def friction_factor(reynolds: float, relative_roughness: float, *, damping: float = 0.8,
                    max_iter: int = 100) -> float:
    """Darcy friction factor from the Colebrook-White equation.

    Iterates on ``x = 1/sqrt(lambda)``; the map is a contraction in the
    turbulent regime so a damped fixed point converges in a few dozen steps.
    """
    if reynolds <= 4000:
        raise PhysicsError(f"Reynolds number {reynolds} is not turbulent (needs > 4000)")
    if relative_roughness < 0:
        raise PhysicsError("relative roughness must be nonnegative")
    # rough-pipe asymptote capped to a smooth-pipe guess as the starting point
    x = 7.0 if relative_roughness == 0 else min(_colebrook_rhs(0.0, 1.0, relative_roughness), 7.0)
    residual = math.inf
    for _ in range(max_iter):
        x = (1.0 - damping) * x + damping * _colebrook_rhs(x, reynolds, relative_roughness)
        residual = abs(x - _colebrook_rhs(x, reynolds, relative_roughness))
        if residual < COLEBROOK_TOL * 1e-2:
            break
    if residual >= COLEBROOK_TOL:
        raise ConvergenceError("Colebrook-White iteration did not converge", residual)
    return 1.0 / (x * x)


def compressibility(pressure_bar: float, temperature_k: float = 288.15, alpha_per_bar: float = 6.4e-4) -> float:
    """Linear hydrogen compressibility ``Z = 1 + alpha*p``, fitted near 288 K."""
    if pressure_bar < 0:
        raise PhysicsError(f"negative pressure {pressure_bar}")
    if temperature_k <= 0:
        raise PhysicsError("temperature must be positive")
    return 1.0 + alpha_per_bar * pressure_bar


def reynolds_number(h_kgph: float, diameter_m: float, viscosity_pa_s: float) -> float:
    return 4.0 * (h_kgph / 3600.0) / (math.pi * diameter_m * viscosity_pa_s)


def gas_properties(gas: GasSpec, pipe: PipelineSpec, design_flow_kgph: float | None = None) -> GasProperties:
    """Friction and compressibility for a pipe class, evaluated once at its design flow."""
    flow = pipe.h_lim_kgph if design_flow_kgph is None else design_flow_kgph
    diameter_m = pipe.diameter_mm / 1000.0
    re = reynolds_number(flow, diameter_m, gas.viscosity_pa_s)
    lam = friction_factor(re, gas.roughness_m / diameter_m)
    mean_pressure = 0.5 * (pipe.outlet_pressure_bar + pipe.max_inlet_pressure_bar)
    z = compressibility(mean_pressure, gas.mean_temperature_k, gas.compressibility_alpha_per_bar)
    return GasProperties(lam, z, gas.mean_temperature_k, gas.density_kg_m3, gas.roughness_m, gas.viscosity_pa_s)


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipeLeg:
    distance_km: float
    diameter_mm: float
    outlet_pressure_bar: float
    max_inlet_pressure_bar: float
    count: int
    h_lim_kgph: float
    gas: GasProperties
    weymouth_coeff: float = 5007.7

    @classmethod
    def from_spec(cls, spec: PipelineSpec, gas: GasProperties, distance_km: float, count: int,
                  weymouth_coeff: float = 5007.7) -> "PipeLeg":
        return cls(distance_km, spec.diameter_mm, spec.outlet_pressure_bar, spec.max_inlet_pressure_bar,
                   count, spec.h_lim_kgph, gas, weymouth_coeff)

    @property
    def resistance(self) -> float:
        """K in ``p_in**2 - p_out**2 = K * (H/N)**2``."""
        return self.weymouth_coeff * self.gas.flow_group * self.distance_km / self.diameter_mm**5

    @property
    def per_pipe_limit_kgph(self) -> float:
        """Binding per-pipe flow limit: catalog rating or the hydraulic maximum."""
        return min(self.h_lim_kgph, pipeline_max_flow(self))

    @property
    def limit_kgph(self) -> float:
        return self.count * self.per_pipe_limit_kgph


def pipeline_inlet_pressure(leg: PipeLeg, h_kgph: float, *, check_limit: bool = True) -> float:
    if h_kgph < 0:
        raise PhysicsError(f"negative pipeline flow {h_kgph}")
    if h_kgph == 0:
        return leg.outlet_pressure_bar
    if leg.count < 1:
        raise PhysicsError("positive pipeline flow with zero pipes")
    per_pipe = h_kgph / leg.count
    p_in = math.sqrt(leg.outlet_pressure_bar**2 + leg.resistance * per_pipe**2)
    if check_limit and p_in > leg.max_inlet_pressure_bar * (1.0 + 1e-9):
        raise InfeasibleFlowError(
            f"flow {h_kgph:.6g} kg/h needs inlet pressure {p_in:.6g} bar > {leg.max_inlet_pressure_bar} bar")
    return p_in


def pipeline_max_flow(leg: PipeLeg) -> float:
    """Per-pipe flow that drives the inlet exactly to its maximum pressure."""
    if not leg.distance_km > 0:
        raise PhysicsError("pipeline distance must be positive")
    head = leg.max_inlet_pressure_bar**2 - leg.outlet_pressure_bar**2
    if head <= 0:
        return 0.0
    return math.sqrt(head / leg.resistance)


def with_count(leg, count: int):
    return replace(leg, count=count)


# ---------------------------------------------------------------------------
# storage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StorageState:
    level_kg: float
    min_kg: float
    max_kg: float
    dt_hours: float = 1.0


def storage_step(s: StorageState, h_in_kgph: float, h_out_kgph: float) -> StorageState:
    if h_in_kgph < 0 or h_out_kgph < 0:
        raise PhysicsError("storage flows must be nonnegative")
    level = s.level_kg + s.dt_hours * (h_in_kgph - h_out_kgph)
    if level > s.max_kg + STORAGE_TOL_KG:
        raise StorageBoundError("overflow", level - s.max_kg)
    if level < s.min_kg - STORAGE_TOL_KG:
        raise StorageBoundError("underflow", s.min_kg - level)
    return replace(s, level_kg=level)
