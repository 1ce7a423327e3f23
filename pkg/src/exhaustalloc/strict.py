"""Water-filling allocation when tasks are only assigned in the efficient state."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .model import WorkerParams, ab_coefficients

SNAP = 1e-12


@dataclass(frozen=True)
class StrictSolution:
    alpha: np.ndarray
    water_level: float
    active_set: tuple
    utility: float
    iterations: int = 1
    removed: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "alpha": [float(a) for a in self.alpha],
            "water_level": float(self.water_level),
            "active_set": list(self.active_set),
            "utility": float(self.utility),
            "iterations": self.iterations,
            "removed": list(self.removed),
        }


def marginal_derivative(w: WorkerParams, alpha: float) -> float:
    """d/dalpha of the strict utility: ``l^2 m^2 A / (A + alpha B)^2``."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    A, B = ab_coefficients(w)
    return w.lam**2 * w.mu**2 * A / (A + alpha * B) ** 2


def _coefs(workers: Sequence[WorkerParams]):
    lam = np.array([w.lam for w in workers])
    mu = np.array([w.mu for w in workers])
    A = lam**2 * mu**2 + lam * mu**3 + mu**4
    B = lam**3 + 2 * lam**2 * mu
    return lam, mu, A, B


def water_level(workers: Sequence[WorkerParams], budget: float) -> float:
    """Multiplier beta making the unclipped allocations of ``workers`` sum to ``budget``.

    The unclipped allocation is linear in ``beta**-0.5``, so this is closed form.
    """
    if not workers:
        raise ValueError("empty active set")
    if budget <= 0:
        raise ValueError("budget must be positive")
    lam, mu, A, B = _coefs(workers)
    inv_sqrt = (budget + np.sum(A / B)) / np.sum(lam * mu * np.sqrt(A) / B)
    return float(inv_sqrt**-2)


def _unclipped(lam, mu, A, B, beta):
    return A / B * (lam * mu / np.sqrt(A * beta) - 1.0)


def solve_strict(workers: Sequence[WorkerParams], budget: float) -> StrictSolution:
    """Maximise the total strict utility subject to ``sum(alpha) <= budget``.

    Workers with a negative unclipped share are switched off one at a time,
    largest ``mu/lam`` first (lowest index on ties), and the level recomputed.
    """
    workers = list(workers)
    if not workers:
        raise ValueError("need at least one worker")
    if not np.isfinite(budget) or budget <= 0:
        raise ValueError(f"budget must be a positive finite number, got {budget}")
    lam, mu, A, B = _coefs(workers)
    n = len(workers)
    active = np.ones(n, dtype=bool)
    removed: List[int] = []
    ratio = mu / lam
    it = 0
    while True:
        it += 1
        idx = np.flatnonzero(active)
        beta = water_level([workers[i] for i in idx], budget)
        share = _unclipped(lam[idx], mu[idx], A[idx], B[idx], beta)
        if np.all(share >= 0):
            break
        # drop the worst-recovering active worker; argmax returns the first index on ties
        worst = idx[int(np.argmax(ratio[idx]))]
        assert worst not in removed
        active[worst] = False
        removed.append(int(worst))
    alpha = np.zeros(n)
    alpha[idx] = share
    alpha[alpha < SNAP] = 0.0
    on = np.flatnonzero(alpha > 0)
    if len(on) == 1:
        alpha[on] = budget  # exact, no round-off from the level formula
    utility = float(np.sum(alpha * lam**2 * mu**2 / (A + B * alpha)))
    return StrictSolution(
        alpha=alpha,
        water_level=beta,
        active_set=tuple(int(i) for i in np.flatnonzero(alpha > 0)),
        utility=utility,
        iterations=it,
        removed=tuple(removed),
    )


def allocate_at_level(workers: Sequence[WorkerParams], beta: float) -> np.ndarray:
    """Clipped allocations of ``workers`` at a given water level."""
    lam, mu, A, B = _coefs(workers)
    return np.maximum(_unclipped(lam, mu, A, B, beta), 0.0)
