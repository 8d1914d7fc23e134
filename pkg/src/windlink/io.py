"""Configuration and profile ingestion, bundled defaults, synthetic days."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .model import (ComponentCatalog, CompressorSpec, DayProfile, ElectrolyzerSpec, FuelCellSpec, GasSpec,
                    LineSpec, PipelineSpec, Scenario, StorageSpec, ValidationError, validate_scenario)

SCHEMA_VERSION = 1
HOURS = 24
DEFAULT_SEED = 42


class InputError(ValueError):
    """Malformed input file; the message carries the location."""


def data_path(name: str) -> Path:
    return Path(str(resources.files("windlink") / "data" / name))


def _read_yaml(path: Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise InputError(f"{path}:{mark.line + 1}:{mark.column + 1}: {exc.problem}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a mapping at top level")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InputError(f"{path}: schema_version {version!r} not supported (expected {SCHEMA_VERSION})")
    return data


def _build(cls, data: Any, path: str):
    """Instantiate a (nested) dataclass from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ValidationError([f"{path}: expected a mapping"])
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ValidationError([f"{path}.{k}: unknown key" for k in unknown])
    kwargs = {}
    for name, value in data.items():
        sub = _NESTED.get((cls, name))
        kwargs[name] = _build(sub, value, f"{path}.{name}") if sub else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError([f"{path}: {exc}"]) from exc


_NESTED = {
    (ComponentCatalog, "line"): LineSpec,
    (ComponentCatalog, "electrolyzer"): ElectrolyzerSpec,
    (ComponentCatalog, "fuel_cell"): FuelCellSpec,
    (ComponentCatalog, "compressor"): CompressorSpec,
    (ComponentCatalog, "pipeline_lp"): PipelineSpec,
    (ComponentCatalog, "pipeline_hp"): PipelineSpec,
    (ComponentCatalog, "storage"): StorageSpec,
    (ComponentCatalog, "gas"): GasSpec,
}


def _section(data: dict, key: str, path: Path) -> dict:
    extra = sorted(set(data) - {"schema_version", key})
    if extra:
        raise ValidationError([f"{path}: {k}: unknown key" for k in extra])
    if key not in data:
        raise ValidationError([f"{path}: missing '{key}' section"])
    return data[key]


def load_scenario(path: str | Path | None = None) -> Scenario:
    path = Path(path) if path else data_path("scenario.yaml")
    return _build(Scenario, _section(_read_yaml(path), "scenario", path), "scenario")


def load_catalog(path: str | Path | None = None) -> ComponentCatalog:
    path = Path(path) if path else data_path("catalog.yaml")
    return _build(ComponentCatalog, _section(_read_yaml(path), "catalog", path), "catalog")


def read_day_csv(path: str | Path | None = None, dt_hours: float = 1.0) -> DayProfile:
    """Read ``hour,cf_farm1,...,cf_farmN,lmp`` with exactly 24 data rows."""
    path = Path(path) if path else data_path("day.csv")
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    if not rows:
        raise InputError(f"{path}: empty profile")
    header = [h.strip() for h in rows[0]]
    farms = len(header) - 2
    expected = ["hour", *(f"cf_farm{k + 1}" for k in range(farms)), "lmp"]
    if farms < 1 or header != expected:
        raise InputError(f"{path}:1: header must be {','.join(expected) if farms >= 1 else 'hour,cf_farm1,...,lmp'}")
    data = [r for r in rows[1:] if any(c.strip() for c in r)]
    if len(data) != HOURS:
        raise InputError(f"{path}: expected {HOURS} hourly rows, found {len(data)}")
    cf = np.zeros((farms, HOURS))
    lmp = np.zeros(HOURS)
    for i, row in enumerate(data):
        line = i + 2
        if len(row) != len(header):
            raise InputError(f"{path}:{line}: expected {len(header)} columns, found {len(row)}")
        try:
            values = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise InputError(f"{path}:{line}: {exc}") from exc
        for k in range(farms):
            if not 0.0 <= values[k] <= 1.0:
                raise InputError(f"{path}:{line}: column {header[k + 1]} value {values[k]} outside [0, 1]")
            cf[k, i] = values[k]
        if values[-1] < 0:
            raise InputError(f"{path}:{line}: column lmp value {values[-1]} is negative")
        lmp[i] = values[-1]
    return DayProfile(cf, lmp, dt_hours)


def write_day_csv(day: DayProfile, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", *(f"cf_farm{k + 1}" for k in range(day.farm_count)), "lmp"])
        for t in range(day.hours):
            w.writerow([t, *(f"{v:.6f}" for v in day.capacity_factor[:, t]), f"{day.lmp_usd_per_mwh[t]:.4f}"])


def generate_synthetic_day(seed: int = DEFAULT_SEED, farms: int = 3, mean_cf: float = 0.45,
                           lmp_mean: float = 60.0, lmp_amplitude: float = 30.0) -> DayProfile:
    """Seeded 24-hour profile: night-peaking wind with bounded noise, evening-peaking price.

    The wind swing and noise are sized so that clipping to [0, 1] never binds,
    and the noise is re-centred, so each farm's daily mean equals ``mean_cf``.
    """
    if not 0.0 < mean_cf < 1.0:
        raise ValueError("mean_cf must lie in (0, 1)")
    if farms < 1:
        raise ValueError("farms must be at least 1")
    if lmp_mean < 0 or lmp_amplitude < 0:
        raise ValueError("lmp_mean and lmp_amplitude must be nonnegative")
    rng = np.random.default_rng(seed)
    t = np.arange(HOURS)
    room = min(mean_cf, 1.0 - mean_cf)
    swing = 0.5 * room
    phase = 3.0 + rng.uniform(-2.0, 2.0, size=(farms, 1))
    noise = rng.uniform(-0.3 * room, 0.3 * room, size=(farms, HOURS))
    noise -= noise.mean(axis=1, keepdims=True)
    cf = mean_cf + swing * np.cos(2 * np.pi * (t - phase) / HOURS) + noise
    cf = np.clip(cf, 0.0, 1.0)
    lmp = np.clip(lmp_mean + lmp_amplitude * np.cos(2 * np.pi * (t - 19.0) / HOURS), 0.0, None)
    return DayProfile(cf, lmp)


@dataclass(frozen=True)
class RunConfig:
    scenario_path: str | None = None
    catalog_path: str | None = None
    day_path: str | None = None
    output_dir: str = "out"
    seed: int = DEFAULT_SEED
    synthetic: bool = False


def load_inputs(cfg: RunConfig) -> tuple[Scenario, ComponentCatalog, DayProfile]:
    scenario = load_scenario(cfg.scenario_path)
    catalog = load_catalog(cfg.catalog_path)
    if cfg.synthetic:
        day = generate_synthetic_day(cfg.seed, scenario.farm_count)
    else:
        day = read_day_csv(cfg.day_path)
    validate_scenario(scenario, catalog, day)
    return scenario, catalog, day


def load_defaults() -> tuple[Scenario, ComponentCatalog, DayProfile]:
    return load_inputs(RunConfig())


def config_hash(cfg: RunConfig, extra: dict | None = None) -> str:
    """Hash of the run's resolved input files and options."""
    h = hashlib.sha256()
    for p in (cfg.scenario_path or data_path("scenario.yaml"), cfg.catalog_path or data_path("catalog.yaml")):
        h.update(Path(p).read_bytes())
    if not cfg.synthetic:
        h.update(Path(cfg.day_path or data_path("day.csv")).read_bytes())
    h.update(json.dumps({"seed": cfg.seed, "synthetic": cfg.synthetic, **(extra or {})},
                        sort_keys=True).encode())
    return h.hexdigest()


def to_jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dump_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"
