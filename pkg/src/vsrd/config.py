"""Run configuration: TOML in, validated dataclasses out.

Every validation failure raises ``ConfigError`` naming the offending field
(``time.dt`` and so on); TOML syntax errors carry the parser's line and column.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .certifier import EpsilonGrid
from .discretization import CoupledOperator, ModelSpec
from .errors import ConfigError, ValidationError
from .geometry import GeometrySpec
from .network import ReactionNetwork
from .timestepper import TimeSpec

IC_KINDS = ("uniform", "random_positive", "file")


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "uniform"
    seed: int = 0
    path: str | None = None
    mass: float | None = None  # rescale the initial state to this total mass

    def build(self, op: CoupledOperator) -> np.ndarray:
        if self.kind == "uniform":
            u = np.ones(op.n)
        elif self.kind == "random_positive":
            u = np.random.default_rng(self.seed).uniform(0.5, 1.5, op.n)
        else:
            u = _load_state(self.path)
            if u.shape != (op.n,):
                raise ConfigError(f"initial_condition.path: state has {u.size} entries, layout needs {op.n}")
            if np.any(u < 0) or not np.all(np.isfinite(u)):
                raise ConfigError("initial_condition.path: state must be finite and nonnegative")
        if self.mass is not None:
            u = u * (self.mass / op.total_mass(u))
        return u


def _load_state(path) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"initial_condition.path: file {p} does not exist")
    if p.suffix == ".npy":
        return np.load(p).astype(float).ravel()
    with open(p) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("state")
    try:
        return np.asarray(data, dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"initial_condition.path: cannot read a state vector ({exc})") from exc


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json", "gnuplot")


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    geometry: GeometrySpec
    time: TimeSpec
    initial_condition: InitialCondition = InitialCondition()
    outputs: OutputSpec = OutputSpec()
    grid: EpsilonGrid = EpsilonGrid()
    sharp: bool = False
    source: str = ""
    raw: dict = field(default_factory=dict)

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        ic = InitialCondition(self.initial_condition.kind, int(seed), self.initial_condition.path,
                              self.initial_condition.mass)
        return RunConfig(self.model, self.geometry, self.time, ic, self.outputs, self.grid, self.sharp,
                         self.source, self.raw)


def _section(data: dict, name: str, required: bool = True) -> dict:
    if name not in data:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    sec = data[name]
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _build(section: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc
    except ValidationError as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def parse_config(data: dict, base: Path = Path(".")) -> RunConfig:
    """Validate a parsed TOML document."""
    model = _section(data, "model")
    kind = model.get("kind")
    network = None
    if kind == "generic":
        if "network" in model:
            npath = base / model["network"]
            if not npath.is_file():
                raise ConfigError(f"model.network: file {npath} does not exist")
            network = ReactionNetwork.from_json(npath)
        elif "rates" in model and isinstance(model["rates"], list):
            network = _build("model", ReactionNetwork, rates=np.asarray(model["rates"], dtype=float),
                             species=tuple(model.get("species", ())))
        else:
            raise ConfigError("model: generic model needs 'network' (JSON path) or a 'rates' matrix")
        rates = {}
        diff = model.get("diffusion", {})
        if isinstance(diff, list):
            diff = dict(zip(network.species, diff))
    else:
        rates = model.get("rates", {})
        diff = model.get("diffusion", {})
    spec = _build("model", ModelSpec, model_kind=kind, rates=rates, diffusion=diff, network=network)

    geo = _section(data, "geometry")
    geometry = _build(
        "geometry",
        GeometrySpec,
        kind=geo.get("kind", "disk"),
        radii=tuple(geo.get("radii", (1.0,))),
        gamma2_fraction=float(geo.get("gamma2_fraction", 0.25)),
        resolution=tuple(geo.get("resolution", (16, 32))),
    )

    tm = _section(data, "time")
    for key in ("t_end", "dt"):
        if key not in tm:
            raise ConfigError(f"time.{key}: required")
    if not float(tm["dt"]) > 0:
        raise ConfigError(f"time.dt: must be positive (got {tm['dt']})")
    tspec = _build("time", TimeSpec, t_end=float(tm["t_end"]), dt=float(tm["dt"]),
                   scheme=tm.get("scheme", "implicit_euler"), output_every=int(tm.get("output_every", 1)))

    icd = _section(data, "initial_condition", required=False)
    ic_kind = icd.get("kind", "uniform")
    if ic_kind not in IC_KINDS:
        raise ConfigError(f"initial_condition.kind: must be one of {IC_KINDS} (got {ic_kind!r})")
    path = icd.get("path")
    if ic_kind == "file":
        if not path:
            raise ConfigError("initial_condition.path: required for kind = 'file'")
        path = str(base / path)
        if not Path(path).is_file():
            raise ConfigError(f"initial_condition.path: file {path} does not exist")
    mass = icd.get("mass")
    if mass is not None and not float(mass) > 0:
        raise ConfigError(f"initial_condition.mass: must be positive (got {mass})")
    ic = InitialCondition(ic_kind, int(icd.get("seed", 0)), path, None if mass is None else float(mass))

    out = _section(data, "outputs", required=False)
    outputs = OutputSpec(str(out.get("directory", "out")), tuple(out.get("formats", OutputSpec.formats)))

    cert = _section(data, "certificate", required=False)
    grid = _build("certificate", EpsilonGrid, lo=float(cert.get("grid_lo", 1e-4)), hi=float(cert.get("grid_hi", 0.9)),
                  n=int(cert.get("grid_n", 40)))
    return RunConfig(spec, geometry, tspec, ic, outputs, grid, bool(cert.get("sharp", False)), "", data)


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} does not exist")
    try:
        with open(p, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    cfg = parse_config(data, p.parent)
    return RunConfig(cfg.model, cfg.geometry, cfg.time, cfg.initial_condition, cfg.outputs, cfg.grid, cfg.sharp,
                     str(p), data)
