"""Sampling-rate allocation for exhaustible workers.

Each worker is a five-state continuous-time Markov chain driven by its own
task arrival rate ``lambda``, recovery rate ``mu`` and an allocated sampling
rate ``alpha``. The package computes stationary behaviour, solves the strict
(water-filling) and moderate (branch-and-bound) allocation problems, checks
them against grid oracles and a Monte Carlo simulator, and regenerates the
numerical studies from the command line.
"""
from .estimators import ModerateAllocator, StrictAllocator
from .model import (
    STATE_NAMES,
    DegenerateChainError,
    Policy,
    StationaryDistribution,
    WorkerParams,
    build_generator,
    moderate_stationary,
    moderate_utility,
    stationary_generic,
    stationary_strict_closed_form,
    strict_utility,
)
from .moderate import alternating_solve
from .oracle import GridSpec, oracle_moderate, oracle_strict, verify_kkt
from .simulate import SimConfig, simulate_system, simulate_worker
from .strict import StrictSolution, solve_strict

__version__ = "0.1.0"

__all__ = [
    "STATE_NAMES", "DegenerateChainError", "Policy", "StationaryDistribution", "WorkerParams",
    "build_generator", "moderate_stationary", "moderate_utility", "stationary_generic",
    "stationary_strict_closed_form", "strict_utility", "StrictSolution", "solve_strict",
    "alternating_solve", "GridSpec", "oracle_strict", "oracle_moderate", "verify_kkt",
    "SimConfig", "simulate_worker", "simulate_system", "StrictAllocator", "ModerateAllocator",
]
