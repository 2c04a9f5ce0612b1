"""Run configuration: YAML file -> validated models -> EngineConfig.

Every dimensioned key carries its unit as a suffix (``_eV``, ``_angstrom``,
``_bohr``, ``_cm``, ``_me``, ``_K``, ``_Mb``). Relative paths are resolved
against the directory of the config file.
"""
from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .continuum import BoxSpec
from .engine import EngineConfig, SpeciesSpec
from .morse import MorseParams
from .units import UNITS
from .xs_data import CrossSectionTable, TableError, load_resolved_set, load_table

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CurveModel(_Strict):
    D_e_eV: float = Field(gt=0)
    omega_e_cm: float = Field(gt=0)
    R_e_bohr: float = Field(gt=0)
    mu_me: float = Field(gt=0)

    def to_params(self, label: str) -> MorseParams:
        return MorseParams.from_spectroscopic(self.D_e_eV, self.omega_e_cm, self.R_e_bohr, self.mu_me, label=label)


class TableModel(_Strict):
    """Either a CSV file (``path``) or a constant value over a photon-energy window."""

    path: str | None = None
    constant_Mb: float | None = Field(default=None, ge=0)
    range_eV: tuple[float, float] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.path is None) == (self.constant_Mb is None):
            raise ValueError("give exactly one of 'path' or 'constant_Mb'")
        if self.constant_Mb is not None and self.range_eV is None:
            raise ValueError("'constant_Mb' needs 'range_eV'")
        if self.range_eV is not None and not self.range_eV[0] < self.range_eV[1]:
            raise ValueError("range_eV must be increasing")
        return self


class SpeciesModel(_Strict):
    name: str
    kind: Literal["atomic", "diatomic"]
    ip_eV: float = Field(gt=0)
    multiplicity_ratio: float = Field(default=1.0, gt=0)
    pi_table: TableModel
    initial_curve: CurveModel | None = None
    final_curve: CurveModel | None = None
    resolved_dir: str | None = None

    @model_validator(mode="after")
    def _curves(self):
        has = (self.initial_curve is not None, self.final_curve is not None)
        if self.kind == "diatomic" and not all(has):
            raise ValueError(f"{self.name}: diatomic species need initial_curve and final_curve")
        if self.kind == "atomic" and any(has):
            raise ValueError(f"{self.name}: atomic species take no curves")
        return self


class SystemModel(_Strict):
    acceptor: SpeciesModel
    donor: SpeciesModel
    r_ad_angstrom: float = Field(gt=0)
    mode: Literal["fc", "ab-initio"] = "fc"


class BoxModel(_Strict):
    r_min_bohr: float = Field(default=0.3, gt=0)
    r_max_angstrom: float = Field(default=8.0, gt=0)
    n_grid: int = Field(default=4000, ge=500)
    e_max_eV: float | None = Field(default=None, gt=0)

    def to_box(self) -> BoxSpec:
        e_max = None if self.e_max_eV is None else self.e_max_eV * UNITS.hartree_per_eV
        return BoxSpec(self.r_min_bohr, self.r_max_angstrom * UNITS.bohr_per_angstrom, self.n_grid, e_max)


class TotalRunModel(_Strict):
    eps_min_eV: float = Field(default=0.0, ge=0)
    eps_max_eV: float = Field(default=4.0, ge=0)
    n_points: int = Field(default=41, ge=1)
    temperature_K: float | None = Field(default=None, ge=0)
    initial: tuple[int, int] = (0, 0)

    @model_validator(mode="after")
    def _order(self):
        if self.eps_max_eV < self.eps_min_eV:
            raise ValueError("eps_max_eV < eps_min_eV")
        if self.n_points > 1 and self.eps_max_eV == self.eps_min_eV:
            raise ValueError("a multi-point grid needs eps_max_eV > eps_min_eV")
        return self

    def grid(self) -> list[float]:
        if self.n_points == 1:
            return [self.eps_min_eV]
        step = (self.eps_max_eV - self.eps_min_eV) / (self.n_points - 1)
        return [self.eps_min_eV + k * step for k in range(self.n_points)]


class SpectrumRunModel(_Strict):
    epsilon_eV: float = Field(default=1.0, ge=0)
    temperatures_K: list[float] = Field(default_factory=list)
    initial: tuple[int, int] = (0, 0)
    gamma_eV: float = Field(default=0.08, gt=0)
    n_points: int = Field(default=2000, ge=2)

    @field_validator("temperatures_K")
    @classmethod
    def _nonneg(cls, v):
        if any(t < 0 for t in v):
            raise ValueError("temperatures must be >= 0 K")
        return v


class RunModel(_Strict):
    total: TotalRunModel = Field(default_factory=TotalRunModel)
    spectrum: SpectrumRunModel = Field(default_factory=SpectrumRunModel)


class OutputModel(_Strict):
    directory: str = "icec_out"


class RunConfig(_Strict):
    schema_version: int
    system: SystemModel
    box: BoxModel = Field(default_factory=BoxModel)
    run: RunModel = Field(default_factory=RunModel)
    output: OutputModel = Field(default_factory=OutputModel)

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; this build reads {SCHEMA_VERSION}")
        return v


class LoadedConfig:
    """A validated RunConfig together with its tables and the resulting EngineConfig."""

    def __init__(self, run: RunConfig, base_dir: Path, source_text: str):
        self.run = run
        self.base_dir = base_dir
        self._file_digests: dict[str, str] = {}
        acceptor = self._species(run.system.acceptor, "acceptor")
        donor = self._species(run.system.donor, "donor")
        try:
            self.engine_config = EngineConfig(acceptor, donor, run.system.r_ad_angstrom * UNITS.bohr_per_angstrom,
                                              run.box.to_box(), run.system.mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.source_text = source_text

    def _path(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    def _table(self, t: TableModel, label: str) -> CrossSectionTable:
        if t.constant_Mb is not None:
            lo, hi = t.range_eV
            return CrossSectionTable.constant(t.constant_Mb, lo, hi, anchor=lo, label=label)
        path = self._path(t.path)
        if not path.is_file():
            raise ConfigError(f"{label}: table file {path} not found")
        self._file_digests[str(t.path)] = hashlib.sha256(path.read_bytes()).hexdigest()
        try:
            return load_table(path, label=label, valid_range=t.range_eV)
        except TableError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    def _species(self, s: SpeciesModel, role: str) -> SpeciesSpec:
        table = self._table(s.pi_table, f"{s.name} PI")
        resolved = None
        if s.resolved_dir is not None:
            d = self._path(s.resolved_dir)
            if not d.is_dir():
                raise ConfigError(f"{s.name}: resolved table directory {d} not found")
            try:
                resolved = load_resolved_set(d)
            except TableError as exc:
                raise ConfigError(f"{d}: {exc}") from exc
            for f in sorted(d.glob("*.csv")):
                self._file_digests[str(Path(s.resolved_dir) / f.name)] = hashlib.sha256(f.read_bytes()).hexdigest()
        if s.kind == "atomic":
            return SpeciesSpec.atomic(s.name, role, s.ip_eV, table, multiplicity_ratio=s.multiplicity_ratio,
                                      resolved=resolved)
        return SpeciesSpec.diatomic(s.name, role, s.ip_eV, table,
                                    s.initial_curve.to_params(s.name),
                                    s.final_curve.to_params(s.name + ("+" if role == "donor" else "-")),
                                    multiplicity_ratio=s.multiplicity_ratio, resolved=resolved)

    def config_hash(self) -> str:
        """sha256 over the validated config and the bytes of every referenced table file."""
        doc = {"config": self.run.model_dump(mode="json"), "files": self._file_digests}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()

    @property
    def output_dir(self) -> Path:
        return self._path(self.run.output.directory)


def parse_config(text: str, base_dir: Path | str = ".") -> LoadedConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    try:
        run = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return LoadedConfig(run, Path(base_dir), text)


def load_config(path) -> LoadedConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(path.read_text(), path.parent)


def preset_text(name: str) -> str:
    res = resources.files("icecvib") / "presets" / f"{name}.yaml"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(available_presets())}")
    return res.read_text()


def available_presets() -> list[str]:
    folder = resources.files("icecvib") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str, base_dir: Path | str = ".") -> LoadedConfig:
    return parse_config(preset_text(name), base_dir)
