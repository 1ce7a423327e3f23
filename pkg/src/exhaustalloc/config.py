"""Experiment configuration files (JSON, ``schema_version`` 1)."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .model import WorkerParams

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Unreadable or invalid configuration."""


@dataclass
class SolverOptions:
    rho: float = 1e-4
    eps: float = 1e-6
    max_outer: int = 50
    node_cap: int = 1_000_000


@dataclass
class GridOptions:
    alpha_steps: int = 1001
    p_steps: int = 101


@dataclass
class SimOptions:
    horizon: float = 1e6
    seed: int = 0
    warmup: float = 0.1


@dataclass
class Population:
    n: int
    q: float
    lambda_sum: float
    mu: float
    ps: float = 0.0

    def workers(self) -> List[WorkerParams]:
        return [WorkerParams(l, self.mu, self.ps) for l in geometric_rates(self.n, self.q, self.lambda_sum)]


@dataclass
class ExperimentConfig:
    workers: List[WorkerParams]
    budget: float
    mode: str = "strict"
    solver: SolverOptions = field(default_factory=SolverOptions)
    grid: GridOptions = field(default_factory=GridOptions)
    sim: SimOptions = field(default_factory=SimOptions)
    population: Optional[Population] = None
    allow_unstable: bool = False

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "budget": self.budget,
            "mode": self.mode,
            "workers": [w.to_dict() for w in self.workers],
            "solver": asdict(self.solver),
            "grid": asdict(self.grid),
            "sim": asdict(self.sim),
            "allow_unstable": self.allow_unstable,
        }
        if self.population is not None:
            d["population"] = asdict(self.population)
        return d


def geometric_rates(n: int, q: float, total: float) -> np.ndarray:
    """Rates ``b * q**i`` (i = 0..n-1) scaled so they sum to ``total``."""
    if n < 1:
        raise ValueError("population size must be >= 1")
    if not 0 < q <= 1:
        raise ValueError("decay factor q must lie in (0, 1]")
    if total <= 0:
        raise ValueError("lambda_sum must be positive")
    b = total / n if q == 1 else total * (1 - q) / (1 - q**n)
    return b * q ** np.arange(n)


def _section(raw: dict, key: str, cls):
    sub = raw.get(key, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"{key}: expected an object")
    known = set(cls.__dataclass_fields__)
    extra = set(sub) - known
    if extra:
        raise ConfigError(f"{key}: unknown field(s) {sorted(extra)}")
    try:
        return cls(**sub)
    except TypeError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported value {version!r}")
    if "budget" not in raw:
        raise ConfigError("budget: missing")
    try:
        budget = float(raw["budget"])
    except (TypeError, ValueError):
        raise ConfigError(f"budget: not a number: {raw['budget']!r}") from None
    if not np.isfinite(budget) or budget <= 0:
        raise ConfigError(f"budget: must be > 0, got {budget}")
    mode = raw.get("mode", "strict")
    if mode not in ("strict", "moderate"):
        raise ConfigError(f"mode: must be 'strict' or 'moderate', got {mode!r}")
    unstable = bool(raw.get("allow_unstable", False))
    population = None
    if "population" in raw:
        population = _section(raw, "population", Population)
        try:
            workers = population.workers()
        except ValueError as exc:
            raise ConfigError(f"population: {exc}") from exc
    elif "workers" in raw:
        if not isinstance(raw["workers"], list) or not raw["workers"]:
            raise ConfigError("workers: expected a non-empty list")
        workers = []
        for i, w in enumerate(raw["workers"]):
            try:
                workers.append(WorkerParams(float(w["lambda"]), float(w["mu"]), float(w.get("ps", 0.0)),
                                            allow_unstable=unstable))
            except KeyError as exc:
                raise ConfigError(f"workers[{i}]: missing field {exc}") from None
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"workers[{i}]: {exc}") from None
    else:
        raise ConfigError("one of 'workers' or 'population' is required")
    solver = _section(raw, "solver", SolverOptions)
    grid = _section(raw, "grid", GridOptions)
    sim = _section(raw, "sim", SimOptions)
    if solver.rho <= 0 or solver.eps <= 0 or solver.max_outer < 1 or solver.node_cap < 1:
        raise ConfigError("solver: rho, eps must be > 0 and max_outer, node_cap >= 1")
    if grid.alpha_steps < 2 or grid.p_steps < 2:
        raise ConfigError("grid: alpha_steps and p_steps must be >= 2")
    if sim.horizon <= 0 or not 0 <= sim.warmup <= 0.5:
        raise ConfigError("sim: horizon must be > 0 and warmup in [0, 0.5]")
    return ExperimentConfig(workers, budget, mode, solver, grid, sim, population, unstable)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_config(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
