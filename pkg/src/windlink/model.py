"""Domain types, case topologies and scenario validation.

All quantities use MW for power, kg/h for hydrogen flow, km for distance,
bar for pressure and USD for money unless a field name says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised with every invariant violation found, each as ``path: message``."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class CaseId(str, Enum):
    HVDC = "HVDC"
    HYBRID = "HYBRID"
    HP = "HP"

    @classmethod
    def parse(cls, value: str | "CaseId") -> "CaseId":
        if isinstance(value, CaseId):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown case id {value!r}; expected one of HVDC, HYBRID, HP") from None


# Component types each case may instantiate.
CASE_COMPONENTS: dict[CaseId, frozenset[str]] = {
    CaseId.HVDC: frozenset({"line"}),
    CaseId.HYBRID: frozenset({"line", "electrolyzer", "fuel_cell", "compressor", "pipeline", "storage"}),
    CaseId.HP: frozenset({"electrolyzer", "fuel_cell", "compressor", "pipeline", "storage"}),
}


@dataclass(frozen=True)
class Scenario:
    farm_capacity_mw: tuple[float, ...]
    dist_farm_substation_km: tuple[float, ...]
    dist_farm_hsc_km: tuple[float, ...]
    dist_hsc_substation_km: float
    horizon_years: int = 30
    storage_capacity_kg: float = 4.0e5
    storage_min_kg: float = 0.0
    storage_initial_kg: float = 2.0e5
    distance_scale: float = 1.0

    def __post_init__(self):
        for name in ("farm_capacity_mw", "dist_farm_substation_km", "dist_farm_hsc_km"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @property
    def farm_count(self) -> int:
        return len(self.farm_capacity_mw)

    def farm_substation_km(self, k: int) -> float:
        return self.dist_farm_substation_km[k] * self.distance_scale

    def farm_hsc_km(self, k: int) -> float:
        return self.dist_farm_hsc_km[k] * self.distance_scale

    def hsc_substation_km(self) -> float:
        return self.dist_hsc_substation_km * self.distance_scale


@dataclass(frozen=True)
class LineSpec:
    p_lim_mw: float
    voltage_kv: float
    resistance_ohm_per_km: float
    converter_eff: float
    capex_per_km: float
    capex_converter_pair: float
    opex_frac_per_year: float


@dataclass(frozen=True)
class ElectrolyzerSpec:
    rated_mw: float
    energy_intensity_mwh_per_kg: float
    capex_per_unit: float
    opex_frac: float


@dataclass(frozen=True)
class FuelCellSpec:
    rated_mw: float
    energy_yield_mwh_per_kg: float
    capex_per_unit: float
    opex_frac: float


@dataclass(frozen=True)
class CompressorSpec:
    energy_per_kg_mwh: float
    capex_per_kgph_capacity: float
    opex_frac: float


@dataclass(frozen=True)
class PipelineSpec:
    h_lim_kgph: float
    diameter_mm: float
    outlet_pressure_bar: float
    max_inlet_pressure_bar: float
    capex_per_km: float
    opex_frac: float


@dataclass(frozen=True)
class StorageSpec:
    capex_per_kg: float
    opex_frac: float


@dataclass(frozen=True)
class GasSpec:
    """Inputs to the friction and compressibility correlations."""

    mean_temperature_k: float = 288.15
    # Normal density (0 degC, 1.01325 bar); see the pipeline pressure-drop docs.
    density_kg_m3: float = 0.0899
    roughness_m: float = 1.5e-5
    viscosity_pa_s: float = 8.9e-6
    compressibility_alpha_per_bar: float = 6.4e-4


@dataclass(frozen=True)
class ComponentCatalog:
    line: LineSpec
    electrolyzer: ElectrolyzerSpec
    fuel_cell: FuelCellSpec
    compressor: CompressorSpec
    pipeline_lp: PipelineSpec
    pipeline_hp: PipelineSpec
    storage: StorageSpec
    gas: GasSpec = field(default_factory=GasSpec)
    loss_coeff: float = 1000.0
    weymouth_coeff: float = 5007.7
    discount_rate: float = 0.0


@dataclass(frozen=True)
class GasProperties:
    friction: float
    compressibility: float
    mean_temperature_k: float
    density_kg_m3: float
    roughness_m: float
    viscosity_pa_s: float

    def __post_init__(self):
        errors = []
        if not 0.005 < self.friction < 0.1:
            errors.append(f"gas.friction: {self.friction} outside (0.005, 0.1)")
        if self.compressibility < 1.0:
            errors.append(f"gas.compressibility: {self.compressibility} < 1")
        if self.mean_temperature_k <= 0:
            errors.append("gas.mean_temperature_k: must be positive")
        if self.density_kg_m3 <= 0:
            errors.append("gas.density_kg_m3: must be positive")
        if errors:
            raise ValidationError(errors)

    @property
    def flow_group(self) -> float:
        """The lumped term lambda*Z*T'/rho of the pressure-drop relation."""
        return self.friction * self.compressibility * self.mean_temperature_k / self.density_kg_m3


@dataclass(frozen=True)
class DayProfile:
    """Hourly wind capacity factors per farm and onshore prices.

    ``capacity_factor`` has shape (farms, hours). The CSV reader insists on 24
    hours; programmatic profiles may be shorter for toy instances.
    """

    capacity_factor: np.ndarray
    lmp_usd_per_mwh: np.ndarray
    dt_hours: float = 1.0

    def __post_init__(self):
        cf = np.array(self.capacity_factor, dtype=float, ndmin=2)
        lmp = np.array(self.lmp_usd_per_mwh, dtype=float).ravel()
        cf.setflags(write=False)
        lmp.setflags(write=False)
        object.__setattr__(self, "capacity_factor", cf)
        object.__setattr__(self, "lmp_usd_per_mwh", lmp)
        errors = profile_errors(self)
        if errors:
            raise ValidationError(errors)

    @property
    def hours(self) -> int:
        return self.lmp_usd_per_mwh.shape[0]

    @property
    def farm_count(self) -> int:
        return self.capacity_factor.shape[0]

    def with_lmp(self, lmp) -> "DayProfile":
        return DayProfile(self.capacity_factor, lmp, self.dt_hours)


@dataclass(frozen=True)
class SizingDecision:
    """Integer build counts for one case.

    Electrolyzer sites are the HSC (one site) in the hybrid case and each farm
    in the pipeline case; counts of components a case does not use are zero.
    """

    lines_per_farm: tuple[int, ...]
    lp_pipes_per_farm: tuple[int, ...]
    hp_pipes: int = 0
    electrolyzers_per_site: tuple[int, ...] = ()
    fuel_cells: int = 0

    def __post_init__(self):
        for name in ("lines_per_farm", "lp_pipes_per_farm", "electrolyzers_per_site"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        object.__setattr__(self, "hp_pipes", int(self.hp_pipes))
        object.__setattr__(self, "fuel_cells", int(self.fuel_cells))
        counts = (*self.lines_per_farm, *self.lp_pipes_per_farm, self.hp_pipes,
                  *self.electrolyzers_per_site, self.fuel_cells)
        if any(c < 0 for c in counts):
            raise ValidationError(["sizing: counts must be nonnegative"])

    @classmethod
    def zero(cls, case: CaseId, farm_count: int) -> "SizingDecision":
        sites = electrolyzer_site_count(case, farm_count)
        return cls((0,) * farm_count, (0,) * farm_count, 0, (0,) * sites, 0)

    def as_vector(self) -> tuple[int, ...]:
        return (*self.lines_per_farm, *self.lp_pipes_per_farm, self.hp_pipes,
                *self.electrolyzers_per_site, self.fuel_cells)

    @property
    def is_empty(self) -> bool:
        return not any(self.as_vector())

    def to_dict(self) -> dict:
        return {
            "lines_per_farm": list(self.lines_per_farm),
            "lp_pipes_per_farm": list(self.lp_pipes_per_farm),
            "hp_pipes": self.hp_pipes,
            "electrolyzers_per_site": list(self.electrolyzers_per_site),
            "fuel_cells": self.fuel_cells,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SizingDecision":
        return cls(
            tuple(data["lines_per_farm"]),
            tuple(data["lp_pipes_per_farm"]),
            data["hp_pipes"],
            tuple(data["electrolyzers_per_site"]),
            data["fuel_cells"],
        )


def electrolyzer_site_count(case: CaseId, farm_count: int) -> int:
    return {CaseId.HVDC: 0, CaseId.HYBRID: 1, CaseId.HP: farm_count}[case]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def profile_errors(day: DayProfile) -> list[str]:
    errors = []
    cf, lmp = day.capacity_factor, day.lmp_usd_per_mwh
    if lmp.size == 0 or cf.size == 0:
        errors.append("profile: empty profile")
        return errors
    if cf.shape[1] != lmp.shape[0]:
        errors.append(f"profile: {cf.shape[1]} capacity-factor hours vs {lmp.shape[0]} price hours")
    if not np.all(np.isfinite(cf)) or np.any(cf < 0) or np.any(cf > 1):
        errors.append("profile.capacity_factor: values must lie in [0, 1]")
    if not np.all(np.isfinite(lmp)) or np.any(lmp < 0):
        errors.append("profile.lmp_usd_per_mwh: prices must be nonnegative")
    if not day.dt_hours > 0:
        errors.append("profile.dt_hours: must be positive")
    return errors


def _field_errors(obj, path: str) -> list[str]:
    errors = []
    for f in fields(obj):
        value = getattr(obj, f.name)
        if not isinstance(value, (int, float)):
            continue
        if not math.isfinite(value):
            errors.append(f"{path}.{f.name}: must be finite")
        elif f.name.startswith("opex") or f.name == "resistance_ohm_per_km":
            if value < 0:
                errors.append(f"{path}.{f.name}: must be nonnegative")
        elif value <= 0:
            errors.append(f"{path}.{f.name}: must be positive")
    return errors


CATALOG_PARTS = ("line", "electrolyzer", "fuel_cell", "compressor", "pipeline_lp", "pipeline_hp", "storage", "gas")


def catalog_errors(c: ComponentCatalog) -> list[str]:
    errors: list[str] = []
    for name in CATALOG_PARTS:
        errors += _field_errors(getattr(c, name), f"catalog.{name}")
    if not c.line.converter_eff <= 1:
        errors.append("catalog.line.converter_eff: efficiency must lie in (0, 1]")
    if not c.fuel_cell.energy_yield_mwh_per_kg < c.electrolyzer.energy_intensity_mwh_per_kg:
        errors.append("catalog.fuel_cell.energy_yield_mwh_per_kg: round-trip efficiency must be below 1")
    for name in ("pipeline_lp", "pipeline_hp"):
        p = getattr(c, name)
        if not p.max_inlet_pressure_bar > p.outlet_pressure_bar:
            errors.append(f"catalog.{name}.max_inlet_pressure_bar: must exceed outlet pressure")
    if c.loss_coeff < 0 or not c.weymouth_coeff > 0:
        errors.append("catalog: loss_coeff must be >= 0 and weymouth_coeff > 0")
    if c.discount_rate < 0:
        errors.append("catalog.discount_rate: must be nonnegative")
    return errors


def scenario_errors(s: Scenario) -> list[str]:
    errors = []
    n = s.farm_count
    if n < 1:
        errors.append("scenario.farm_capacity_mw: farm_count must be at least 1")
    for name in ("dist_farm_substation_km", "dist_farm_hsc_km"):
        values = getattr(s, name)
        if len(values) != n:
            errors.append(f"scenario.{name}: expected {n} entries, got {len(values)}")
        for i, v in enumerate(values):
            if not v > 0:
                errors.append(f"scenario.{name}[{i}]: distances must be positive")
    if not s.dist_hsc_substation_km > 0:
        errors.append("scenario.dist_hsc_substation_km: distances must be positive")
    for i, v in enumerate(s.farm_capacity_mw):
        if not v >= 0:
            errors.append(f"scenario.farm_capacity_mw[{i}]: capacity must be nonnegative")
    if s.horizon_years < 1:
        errors.append("scenario.horizon_years: must be at least 1")
    if not s.distance_scale > 0:
        errors.append("scenario.distance_scale: distance_scale must be positive")
    if s.storage_min_kg < 0:
        errors.append("scenario.storage_min_kg: must be nonnegative")
    if s.storage_min_kg > s.storage_capacity_kg:
        errors.append("scenario.storage_min_kg: storage bounds inverted")
    elif not s.storage_min_kg <= s.storage_initial_kg <= s.storage_capacity_kg:
        errors.append("scenario.storage_initial_kg: initial level outside storage bounds")
    return errors


def validate_scenario(s: Scenario, c: ComponentCatalog, day: DayProfile | None = None) -> Scenario:
    """Return ``s`` unchanged if it and ``c`` (and ``day``) are valid.

    Raises :class:`ValidationError` listing every violation otherwise.
    """
    errors = scenario_errors(s) + catalog_errors(c)
    if day is not None:
        errors += profile_errors(day)
        if day.farm_count != s.farm_count:
            errors.append(f"profile: {day.farm_count} farm columns for {s.farm_count} farms")
    if errors:
        raise ValidationError(errors)
    return s


def round_trip_efficiency(c: ComponentCatalog) -> float:
    return c.fuel_cell.energy_yield_mwh_per_kg / c.electrolyzer.energy_intensity_mwh_per_kg


# ---------------------------------------------------------------------------
# topology
# ---------------------------------------------------------------------------

SUBSTATION = "substation"
HSC = "hsc"


@dataclass(frozen=True)
class Edge:
    kind: str  # "line" | "lp_pipe" | "hp_pipe"
    source: str
    target: str
    length_km: float
    farm: int | None = None

    @property
    def name(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class Topology:
    case: CaseId
    farms: tuple[str, ...]
    edges: tuple[Edge, ...]
    electrolyzer_sites: tuple[str, ...]
    compressor_sites: tuple[str, ...]
    fuel_cell_site: str | None
    storage_site: str | None

    @property
    def lines(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.kind == "line")

    @property
    def pipes(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.kind != "line")

    @property
    def lp_pipes(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.kind == "lp_pipe")

    @property
    def hp_pipe(self) -> Edge | None:
        return next((e for e in self.edges if e.kind == "hp_pipe"), None)

    @property
    def component_types(self) -> frozenset[str]:
        kinds = set()
        if self.lines:
            kinds.add("line")
        if self.pipes:
            kinds.add("pipeline")
        if self.electrolyzer_sites:
            kinds.add("electrolyzer")
        if self.compressor_sites:
            kinds.add("compressor")
        if self.fuel_cell_site:
            kinds.add("fuel_cell")
        if self.storage_site:
            kinds.add("storage")
        return frozenset(kinds)


def farm_name(k: int) -> str:
    return f"farm{k + 1}"


def build_topology(case: CaseId | str, s: Scenario) -> Topology:
    case = CaseId.parse(case)
    farms = tuple(farm_name(k) for k in range(s.farm_count))
    if case is CaseId.HVDC:
        edges = tuple(Edge("line", f, SUBSTATION, s.farm_substation_km(k), k) for k, f in enumerate(farms))
        return Topology(case, farms, edges, (), (), None, None)
    hp = Edge("hp_pipe", HSC, SUBSTATION, s.hsc_substation_km())
    if case is CaseId.HYBRID:
        edges = tuple(Edge("line", f, HSC, s.farm_hsc_km(k), k) for k, f in enumerate(farms)) + (hp,)
        return Topology(case, farms, edges, (HSC,), (HSC,), SUBSTATION, SUBSTATION)
    edges = tuple(Edge("lp_pipe", f, HSC, s.farm_hsc_km(k), k) for k, f in enumerate(farms)) + (hp,)
    return Topology(case, farms, edges, farms, farms + (HSC,), SUBSTATION, SUBSTATION)
