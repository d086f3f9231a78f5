"""Experiment configuration: TOML ingestion, validation, hashing.

A config file is a TOML document with the sections below; every key has
a default, so the empty document is a valid (small) experiment.  The
canonical JSON form of a config is embedded into every output file for
provenance, along with its SHA-256 hash and the RNG seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .field import FIELD_KINDS
from .solver import SMOOTHER_KINDS


class ConfigError(ValueError):
    pass


@dataclass
class MeshConfig:
    nx: int = 4
    ny: int = 4
    r: int = 8
    degree: int = 1


@dataclass
class FieldConfig:
    kind: str = "island"
    k_perp: float = 1.0
    ratio: float = 1e6
    params: list = field(default_factory=list)
    table: str = ""  # path for kind = "table"


@dataclass
class SimConfig:
    tau: float = 5e-7
    steps: int = 10
    t0_center: list = field(default_factory=lambda: [0.5, 0.5])
    t0_sigma: float = 0.2


@dataclass
class SolverConfig:
    smoother: str = "sgs"
    nu: int = 5
    omega: float = 2.0 / 3.0
    rtol: float = 1e-5
    maxiter: int = 100
    mode: str = "direct"  # fine reference solver: direct | pcg


@dataclass
class MsConfig:
    enabled: bool = True
    J: int = 6
    n_extra: int = 1
    dense_limit: int = 4000


@dataclass
class SweepConfig:
    J: list = field(default_factory=lambda: [1, 2, 4, 8])
    ratios: list = field(default_factory=lambda: [1e3, 1e6])


@dataclass
class BenchConfig:
    J: list = field(default_factory=lambda: [4, 8, 16])
    ratios: list = field(default_factory=lambda: [1e6, 1e12])
    smoothers: list = field(default_factory=lambda: ["jacobi", "sgs"])
    include_unpreconditioned: bool = True


@dataclass
class AnalysisConfig:
    seed: int = 20240901
    samples: int = 100
    subdomain_limit: int = 0        # 0 = all subdomains in local suites
    dense_limit: int = 2000
    constant_cap: float = 32.0
    ktg_bound_tol: float = 3.0
    ktg_modes: list = field(default_factory=lambda: [2, 4, 6])
    presets: list = field(default_factory=lambda: ["island", "double_island", "open_mixed"])
    ratios: list = field(default_factory=lambda: [1e3, 1e6, 1e9])
    transient_field: str = "open_mixed"
    transient_spread_cap: float = 2.0


@dataclass
class ExperimentConfig:
    mesh: MeshConfig = field(default_factory=MeshConfig)
    field_: FieldConfig = field(default_factory=FieldConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    ms: MsConfig = field(default_factory=MsConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    SECTIONS = {"mesh": ("mesh", MeshConfig), "field": ("field_", FieldConfig),
                "sim": ("sim", SimConfig), "solver": ("solver", SolverConfig),
                "ms": ("ms", MsConfig), "sweep": ("sweep", SweepConfig),
                "bench": ("bench", BenchConfig), "analysis": ("analysis", AnalysisConfig)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        cfg = cls()
        for section, values in data.items():
            if section not in cls.SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            attr, section_cls = cls.SECTIONS[section]
            target = getattr(cfg, attr)
            known = {f.name for f in dataclasses.fields(section_cls)}
            for key, value in values.items():
                if key not in known:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                setattr(target, key, value)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        return cls.from_dict(data)

    def validate(self) -> None:
        m = self.mesh
        if min(m.nx, m.ny, m.r) < 1:
            raise ConfigError("mesh counts nx, ny, r must be >= 1")
        if m.degree not in (1, 2):
            raise ConfigError("mesh.degree must be 1 or 2")
        f = self.field_
        if f.kind not in FIELD_KINDS:
            raise ConfigError(f"field.kind must be one of {FIELD_KINDS}")
        if f.kind == "table" and not f.table:
            raise ConfigError("field.kind = 'table' requires field.table (path)")
        if f.k_perp <= 0 or f.ratio < 1.0:
            raise ConfigError("need field.k_perp > 0 and field.ratio >= 1")
        if self.sim.tau <= 0 or self.sim.steps < 1:
            raise ConfigError("need sim.tau > 0 and sim.steps >= 1")
        s = self.solver
        if s.smoother not in SMOOTHER_KINDS:
            raise ConfigError(f"solver.smoother must be one of {SMOOTHER_KINDS}")
        if s.nu < 0 or not 0 < s.omega <= 1 or s.rtol <= 0 or s.maxiter < 1:
            raise ConfigError("invalid solver settings")
        if s.mode not in ("direct", "pcg"):
            raise ConfigError("solver.mode must be 'direct' or 'pcg'")
        if self.ms.J < 1 or self.ms.n_extra < 0:
            raise ConfigError("need ms.J >= 1 and ms.n_extra >= 0")
        if not self.sweep.J or not self.sweep.ratios:
            raise ConfigError("sweep.J and sweep.ratios must be nonempty")
        if any(r < 1 for r in self.sweep.ratios) or any(j < 1 for j in self.sweep.J):
            raise ConfigError("sweep values must be >= 1")
        if not set(self.bench.smoothers) <= set(SMOOTHER_KINDS):
            raise ConfigError(f"bench.smoothers must be within {SMOOTHER_KINDS}")
        if not self.bench.J or not self.bench.ratios:
            raise ConfigError("bench.J and bench.ratios must be nonempty")
        a = self.analysis
        if a.samples < 1 or a.dense_limit < 1:
            raise ConfigError("invalid analysis settings")
        if not set(a.presets) <= set(FIELD_KINDS):
            raise ConfigError(f"analysis.presets must be within {FIELD_KINDS}")

    def to_canonical_dict(self) -> dict:
        out = {}
        for section, (attr, _) in self.SECTIONS.items():
            out[section] = dataclasses.asdict(getattr(self, attr))
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.to_canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path=None) -> ExperimentConfig:
    """Config from a TOML file, or the defaults when no path is given."""
    if path is None:
        return ExperimentConfig()
    return ExperimentConfig.from_file(Path(path))
