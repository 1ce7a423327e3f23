"""Five-state worker chain: generators, stationary distributions, utilities.

States are always ordered ``(1, 2, 3, 1*, 2*)``. State 3 is the fully
efficient state, 2 and 2* are moderately efficient, 1 and 1* cannot take
work. A task assignment moves the worker to 1*.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

log = logging.getLogger(__name__)

STATE_NAMES = ("s1", "s2", "s3", "s1x", "s2x")
S1, S2, S3, S1X, S2X = range(5)

COND_WARN = 1e12


class DegenerateChainError(ValueError):
    """The balance system does not have a unique probability solution."""


@dataclass(frozen=True)
class WorkerParams:
    """Rates of one worker.

    ``lam`` is the recovery rate, ``mu`` the exhaustion rate and ``ps`` the
    probability that a task assigned in a moderate state succeeds.
    """

    lam: float
    mu: float
    ps: float = 0.0
    allow_unstable: bool = False

    def __post_init__(self):
        for name in ("lam", "mu", "ps"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.lam <= 0 or self.mu <= 0:
            raise ValueError(f"rates must be positive, got lam={self.lam}, mu={self.mu}")
        if not 0.0 <= self.ps <= 1.0:
            raise ValueError(f"ps must lie in [0, 1], got {self.ps}")
        if self.lam < self.mu:
            if not self.allow_unstable:
                raise ValueError(
                    f"lam={self.lam} < mu={self.mu}; pass allow_unstable=True to accept"
                )
            warnings.warn("worker with lam < mu is outside the modelled regime", stacklevel=3)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "ps": self.ps}


@dataclass(frozen=True)
class StationaryDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (5,):
            raise ValueError("a stationary distribution has exactly 5 entries")
        if np.any(p < -1e-14):
            raise ValueError(f"negative probability mass: {p}")
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __getitem__(self, i):
        return self.probs[i]

    def as_dict(self) -> dict:
        return dict(zip(STATE_NAMES, map(float, self.probs)))


@dataclass(frozen=True)
class Policy:
    """Per-worker sampling rates and moderate-state assignment probabilities."""

    alpha: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        p = np.array(self.p, dtype=float)
        if a.ndim != 1 or a.shape != p.shape:
            raise ValueError("alpha and p must be 1-d vectors of equal length")
        if np.any(a < 0):
            raise ValueError("sampling rates must be nonnegative")
        if np.any((p < 0) | (p > 1)):
            raise ValueError("assignment probabilities must lie in [0, 1]")
        a.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return len(self.alpha)

    def within_budget(self, budget: float, tol: float = 1e-9) -> bool:
        return float(self.alpha.sum()) <= budget + tol


def _check_rate(alpha: float, p: float = 0.0) -> None:
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"sampling rate must be a finite value >= 0, got {alpha}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"assignment probability must lie in [0, 1], got {p}")


def build_generator(w: WorkerParams, alpha: float, p: float = 0.0, mode: str = "strict") -> np.ndarray:
    """Return the 5x5 rate matrix of the worker chain.

    In ``strict`` mode tasks are only assigned in state 3 and ``p`` is ignored.
    """
    if mode not in ("strict", "moderate"):
        raise ValueError(f"unknown mode {mode!r}")
    _check_rate(alpha, p)
    if mode == "strict":
        p = 0.0
    lam, mu = w.lam, w.mu
    Q = np.zeros((5, 5))
    Q[S1, S2] = lam
    Q[S2, S3] = lam
    Q[S2, S1] = mu
    Q[S3, S2] = mu
    Q[S3, S1X] = alpha
    Q[S1X, S2X] = mu
    Q[S2X, S3] = mu
    Q[S2X, S1X] = lam + alpha * p
    Q[S2, S1X] = alpha * p
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def stationary_generic(Q: np.ndarray) -> StationaryDistribution:
    """Solve ``pi Q = 0`` with ``sum(pi) = 1``.

    The normalisation row replaces the last balance row; LAPACK's LU with
    partial pivoting does the elimination.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    M = Q.T.copy()
    M[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    cond = np.linalg.cond(M)
    if not np.isfinite(cond):
        raise DegenerateChainError("balance system is singular (more than one closed class)")
    if cond > COND_WARN:
        warnings.warn(f"ill-conditioned balance system (cond ~ {cond:.3g})", stacklevel=2)
    try:
        pi = np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by cond
        raise DegenerateChainError(str(exc)) from exc
    return StationaryDistribution(pi)


def stationary_strict_closed_form(w: WorkerParams, alpha: float) -> StationaryDistribution:
    _check_rate(alpha)
    lam, mu = w.lam, w.mu
    raw = np.array([
        mu**4,
        lam * mu**3,
        lam**2 * mu**2,
        alpha * lam**2 * (lam + mu),
        alpha * lam**2 * mu,
    ])
    return StationaryDistribution(raw / raw.sum())


def ab_coefficients(w: WorkerParams) -> Tuple[float, float]:
    """Water-filling constants ``A = l^2 m^2 + l m^3 + m^4``, ``B = l^3 + 2 l^2 m``."""
    lam, mu = w.lam, w.mu
    A = lam**2 * mu**2 + lam * mu**3 + mu**4
    B = lam**3 + 2 * lam**2 * mu
    return A, B


def strict_utility(w: WorkerParams, alpha: float) -> float:
    """Rate of successful tasks when work is only handed out in state 3.

    Written as ``alpha * l^2 m^2 / (A + B alpha)`` so that ``alpha = 0`` is fine.
    """
    _check_rate(alpha)
    A, B = ab_coefficients(w)
    return alpha * w.lam**2 * w.mu**2 / (A + B * alpha)


def moderate_stationary(w: WorkerParams, alpha: float, p: float) -> StationaryDistribution:
    return stationary_generic(build_generator(w, alpha, p, mode="moderate"))


def moderate_utility(w: WorkerParams, alpha: float, p: float) -> float:
    pi = moderate_stationary(w, alpha, p).probs
    return alpha * pi[S3] + w.ps * alpha * p * (pi[S2] + pi[S2X])


def ratio_tables(w: WorkerParams, two_p: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Coefficients ``F[i, k]``, ``G[i, k]`` of ``alpha**i * p**k``.

    ``f/g`` equals :func:`moderate_utility`. ``g`` is normalised so that
    ``g(0) = 1 + l/m + l^2/m^2``. With ``two_p=True`` the alpha*p term of
    the denominator uses ``2p`` instead of ``3p``; that variant disagrees
    with the balance equations and is kept for comparison only.
    """
    lam, mu, ps = w.lam, w.mu, w.ps
    r = lam / mu
    F = np.zeros((4, 3))
    G = np.zeros((4, 3))
    F[1, 0] = r**2
    F[1, 1] = r * ps
    F[2, 1] = lam * (lam * ps + mu) / mu**3
    F[2, 2] = lam * ps / mu**2
    F[3, 2] = lam * ps / mu**3
    G[0, 0] = 1 + r + r**2
    G[1, 0] = lam * (lam**2 + 2 * lam * mu) / mu**4
    G[1, 1] = lam * (lam + (2 if two_p else 3) * mu) / mu**3
    G[2, 1] = lam * (2 * lam + 2 * mu) / mu**4
    G[2, 2] = lam / mu**3
    G[3, 2] = lam / mu**4
    if two_p:
        log.warning(
            "2p ratio variant requested for %s; it disagrees with the balance equations "
            "for p > 0 (alpha*p denominator coefficient 2 vs 3)", w,
        )
    return F, G


def ratio_coefficients(w: WorkerParams, p: float, two_p: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Cubic coefficients of numerator and denominator in alpha, ascending order."""
    _check_rate(0.0, p)
    F, G = ratio_tables(w, two_p)
    pk = p ** np.arange(3)
    return F @ pk, G @ pk


def p_ratio_coefficients(w: WorkerParams, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Quadratic coefficients of numerator and denominator in p at fixed alpha."""
    _check_rate(alpha)
    F, G = ratio_tables(w)
    ai = alpha ** np.arange(4)
    return ai @ F, ai @ G


def ratio_value(w: WorkerParams, alpha: float, p: float, two_p: bool = False) -> float:
    f, g = ratio_coefficients(w, p, two_p)
    return float(np.polynomial.polynomial.polyval(alpha, f) / np.polynomial.polynomial.polyval(alpha, g))


def total_strict_utility(workers, alpha) -> float:
    return float(sum(strict_utility(w, a) for w, a in zip(workers, alpha)))


def total_moderate_utility(workers, alpha, p) -> float:
    return float(sum(moderate_utility(w, a, q) for w, a, q in zip(workers, alpha, p)))
