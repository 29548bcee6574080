"""JSON experiment configuration."""
import json
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..errors import InputError
from ..simulation import SimulationConfig
from .selection import ESTIMATORS, gamma_grid, geometric_grid

MODES = ("SIMULATE", "FIT", "PREDICT", "SWEEP", "WEIGHTS", "DIAGNOSE")
WEIGHT_SOURCES = ("EXACT", "RULSIF", "CONSTANT_ONE", "FILE")
SAMPLING = ("ALS", "UNIFORM")

DEFAULT_LAMBDAS = tuple(geometric_grid(1e-4, 1.0, 10))
DEFAULT_GAMMAS = tuple(gamma_grid())


@dataclass(frozen=True)
class RulsifOptions:
    alpha: float = 0.1
    fraction: float = 0.01   # share of the test set reserved for weight estimation
    centers_k: int | None = None
    gamma_w: float | None = None
    lambda_w: float | None = None

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise InputError("rulsif.alpha must lie in [0, 1)")
        if not 0 < self.fraction < 1:
            raise InputError("rulsif.fraction must lie in (0, 1)")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "FIT"
    simulation: SimulationConfig | None = None
    train_path: str | None = None
    test_path: str | None = None
    weights_path: str | None = None
    model_path: str | None = None
    estimators: tuple = ("NYSTROM_WKRR",)
    weight_source: str = "EXACT"
    lambda_grid: tuple = DEFAULT_LAMBDAS
    gamma_grid: tuple = DEFAULT_GAMMAS
    m_grid: tuple = (1000,)
    n_grid: tuple = ()
    cv_fraction: float = 0.7
    cv: bool = True
    weighted_validation: bool = True
    sampling: str = "ALS"
    seeds: tuple = (0,)
    lam: float | None = None
    gamma: float | None = None
    m: int | None = None
    output: str = "out"
    workers: int = 1
    rulsif: RulsifOptions = field(default_factory=RulsifOptions)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise InputError(f"estimators must be drawn from {ESTIMATORS}, got {bad}")
        if self.weight_source not in WEIGHT_SOURCES:
            raise InputError(f"weight_source must be one of {WEIGHT_SOURCES}")
        if self.sampling not in SAMPLING:
            raise InputError(f"sampling must be one of {SAMPLING}")
        if not 0 < self.cv_fraction < 1:
            raise InputError("cv_fraction must lie in (0, 1)")
        has_data = self.train_path is not None or self.test_path is not None
        if (self.simulation is None) == (not has_data):
            raise InputError("give exactly one of 'simulation' or data paths")
        if self.weight_source == "EXACT" and self.simulation is None:
            raise InputError("EXACT weights are only available for simulated data")
        if self.weight_source == "FILE" and self.weights_path is None and self.mode in ("FIT", "SWEEP", "DIAGNOSE"):
            raise InputError("weight_source FILE needs weights_path")
        if self.mode == "PREDICT" and (self.model_path is None or self.test_path is None):
            raise InputError("PREDICT needs model_path and test_path")
        if self.mode in ("FIT", "SWEEP", "WEIGHTS", "DIAGNOSE") and self.simulation is None \
                and self.train_path is None:
            raise InputError(f"{self.mode} needs train_path")
        if self.mode == "SWEEP" and not (self.lambda_grid and self.gamma_grid and self.seeds):
            raise InputError("SWEEP needs nonempty lambda, gamma and seed grids")
        if "NYSTROM_WKRR" in self.estimators and not self.m_grid and self.m is None:
            raise InputError("the Nystrom estimator needs m or m_grid")
        if any(s < 0 for s in self.seeds):
            raise InputError("seeds must be nonnegative")
        if any(v <= 0 for v in self.lambda_grid + self.gamma_grid):
            raise InputError("grid values must be positive")
        if any(int(m) != m or m < 1 for m in self.m_grid):
            raise InputError("m_grid must hold positive integers")
        if self.workers < 1:
            raise InputError("workers must be >= 1")

    @property
    def n_values(self):
        if self.n_grid:
            return self.n_grid
        return (self.simulation.n_train,) if self.simulation is not None else (None,)

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, SimulationConfig):
                v = v.to_dict()
            elif isinstance(v, RulsifOptions):
                v = {g.name: getattr(v, g.name) for g in fields(v)}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise InputError("config must be a JSON object")
        d = dict(d)
        known = {f.name for f in fields(cls)} | {"estimator"}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config fields: {sorted(unknown)}")
        if "estimator" in d:
            est = d.pop("estimator")
            d["estimators"] = [est] if isinstance(est, str) else est
        if d.get("simulation") is not None:
            sim = d["simulation"]
            d["simulation"] = sim if isinstance(sim, SimulationConfig) else SimulationConfig.from_dict(sim)
        if "rulsif" in d:
            d["rulsif"] = RulsifOptions(**d["rulsif"])
        if "lambda_grid" in d:
            d["lambda_grid"] = parse_grid(d["lambda_grid"], "lambda_grid")
        if "gamma_grid" in d:
            d["gamma_grid"] = parse_grid(d["gamma_grid"], "gamma_grid")
        for key, cast in (("estimators", str), ("m_grid", int), ("n_grid", int), ("seeds", int)):
            if key in d:
                d[key] = tuple(cast(v) for v in np.atleast_1d(d[key]))
        try:
            return cls(**d)
        except TypeError as exc:
            raise InputError(str(exc)) from None

    def with_overrides(self, **kw):
        """Apply CLI overrides; ``None`` values are ignored."""
        kw = {k: v for k, v in kw.items() if v is not None}
        updates = {}
        if "lam" in kw:
            updates["lam"] = kw["lam"]
            updates["lambda_grid"] = (kw["lam"],)
        if "gamma" in kw:
            updates["gamma"] = kw["gamma"]
            updates["gamma_grid"] = (kw["gamma"],)
        if "m" in kw:
            updates["m"] = kw["m"]
            updates["m_grid"] = (kw["m"],)
        if "seed" in kw:
            updates["seeds"] = (kw["seed"],)
            if self.simulation is not None:
                updates["simulation"] = replace(self.simulation, seed=kw["seed"])
        if "output" in kw:
            updates["output"] = kw["output"]
        if "mode" in kw:
            updates["mode"] = kw["mode"]
        return self.from_dict({**self.to_dict(), **{
            k: (v.to_dict() if isinstance(v, SimulationConfig) else v) for k, v in updates.items()
        }})


def parse_grid(spec, name):
    """A grid is a list of values or ``{"min": a, "max": b, "num": Q}`` (geometric)."""
    if isinstance(spec, dict):
        try:
            return tuple(float(v) for v in geometric_grid(spec["min"], spec["max"], spec["num"]))
        except KeyError as exc:
            raise InputError(f"{name}: geometric grid needs {exc}") from None
    try:
        return tuple(float(v) for v in np.atleast_1d(spec))
    except (TypeError, ValueError):
        raise InputError(f"{name}: expected a list of numbers") from None


def load_config(path, mode=None):
    """Read a JSON config; ``mode`` (from the subcommand) replaces the file's mode."""
    if not os.path.exists(path):
        raise InputError(f"{path}: config file not found")
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None
    if mode is not None and isinstance(data, dict):
        data["mode"] = mode
    return ExperimentConfig.from_dict(data)


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
