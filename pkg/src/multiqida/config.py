"""Experiment configuration read from TOML files."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ansatz import AnsatzKind
from .layers import FinesseRatio
from .lattice import LatticeSpec
from .vqe import OptimizerConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ReferenceConfig:
    backend: str = "exact"
    chi: int = 64
    sweeps: int = 30
    tol: float = 1e-10
    seed: int = 0
    degeneracy_tol: float = 1e-4

    def __post_init__(self):
        if self.backend not in ("exact", "dmrg", "auto"):
            raise ConfigError(f"reference backend must be exact, dmrg or auto, got {self.backend!r}")
        if self.chi < 1 or self.sweeps < 1:
            raise ConfigError("chi and sweeps must be positive")


@dataclass(frozen=True)
class LayerConfig:
    finesse_start: float = 0.9
    finesse_step: float = 0.1
    thresholds: tuple[float, ...] | None = None
    closure: int = 1
    merge: tuple[tuple[int, ...], ...] = ()

    def finesse(self) -> FinesseRatio:
        if self.thresholds is not None:
            return FinesseRatio(self.thresholds)
        return FinesseRatio.uniform(self.finesse_start, self.finesse_step)


@dataclass(frozen=True)
class Expected:
    """Reference values checked by ``--self-check``."""

    e_exact: float | None = None
    e_neel: float | None = None
    energy_tol: float = 1e-5
    layers: tuple | None = None
    cnots: dict = field(default_factory=dict)
    aqe_avg_min: dict = field(default_factory=dict)
    aqe_best_min: dict = field(default_factory=dict)
    aqe_avg_max: dict = field(default_factory=dict)
    med_max: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    lattice: LatticeSpec
    reference: ReferenceConfig = ReferenceConfig()
    layers: LayerConfig = LayerConfig()
    ansatze: tuple[str, ...] = ("QIDA_SO4",)
    n_runs: int = 10
    seed: int = 0
    threads: int = 1
    out: str = "results"
    optimizer: OptimizerConfig = OptimizerConfig()
    expected: Expected = Expected()

    def __post_init__(self):
        if not self.ansatze:
            raise ConfigError("at least one ansatz kind is required")
        for a in self.ansatze:
            try:
                AnsatzKind.parse(a)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")

    def with_overrides(self, seed=None, runs=None, out=None, backend=None, threads=None) -> ExperimentConfig:
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if runs is not None:
            cfg = replace(cfg, n_runs=runs)
        if out is not None:
            cfg = replace(cfg, out=str(out))
        if backend is not None:
            cfg = replace(cfg, reference=replace(cfg.reference, backend=backend))
        if threads is not None:
            cfg = replace(cfg, threads=threads)
        return cfg


_SECTIONS = {"name", "lattice", "reference", "layers", "run", "optimizer", "expected"}


def _build(cls, table: dict, section: str, **convert):
    known = set(cls.__dataclass_fields__)
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")
    kwargs = {k: convert[k](v) if k in convert else v for k, v in table.items()}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def _tuple_of_tuples(v):
    return tuple(tuple(x) for x in v)


def _layers_golden(v):
    return tuple(tuple(tuple(p) for p in layer) for layer in v)


def parse_config(data: dict, default_name: str = "experiment") -> ExperimentConfig:
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    if "lattice" not in data:
        raise ConfigError("missing [lattice] section")
    lattice = _build(LatticeSpec, data["lattice"], "lattice")
    reference = _build(ReferenceConfig, data.get("reference", {}), "reference")
    layers = _build(LayerConfig, data.get("layers", {}), "layers",
                    thresholds=tuple, merge=_tuple_of_tuples)
    optimizer = _build(OptimizerConfig, data.get("optimizer", {}), "optimizer")
    expected = _build(Expected, data.get("expected", {}), "expected", layers=_layers_golden)
    run = dict(data.get("run", {}))
    allowed = {"ansatze", "n_runs", "seed", "threads", "out"}
    if set(run) - allowed:
        raise ConfigError(f"unknown key(s) in [run]: {sorted(set(run) - allowed)}")
    if "ansatze" in run:
        run["ansatze"] = tuple(run["ansatze"])
    try:
        return ExperimentConfig(data.get("name", default_name), lattice, reference, layers,
                                optimizer=optimizer, expected=expected, **run)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        preset = preset_path(str(path))
        if preset is None:
            raise ConfigError(f"config file {path} not found and no preset of that name")
        path = preset
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, path.stem)


def preset_names() -> list[str]:
    root = resources.files("multiqida") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_path(name: str) -> Path | None:
    p = resources.files("multiqida") / "presets" / f"{name}.toml"
    return Path(str(p)) if p.is_file() else None
