"""Brute-force references: budget dynamic programming on a grid, KKT checks.

Both objectives are sums of per-worker terms, so the best grid allocation is
found exactly by a max-plus recursion over (worker, budget units used).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .model import Policy, WorkerParams, ab_coefficients, ratio_tables, total_moderate_utility, total_strict_utility
from .strict import StrictSolution, marginal_derivative


@dataclass(frozen=True)
class GridSpec:
    alpha_steps: int = 1001
    p_steps: int = 101

    def __post_init__(self):
        if self.alpha_steps < 2 or self.p_steps < 2:
            raise ValueError("grids need at least the two endpoints")

    def alpha_grid(self, budget: float) -> np.ndarray:
        return np.linspace(0.0, budget, self.alpha_steps)

    def p_grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.p_steps)


@dataclass
class OracleResult:
    alpha: np.ndarray
    utility: float  # grid objective re-evaluated at the grid point
    resolution: float
    grid_error: float  # rigorous bound on (continuous optimum - utility)
    p: Optional[np.ndarray] = None
    lipschitz: float = 0.0

    @property
    def policy(self) -> Policy:
        return Policy(self.alpha, self.p if self.p is not None else np.zeros_like(self.alpha))

    def to_dict(self) -> dict:
        d = {
            "alpha": [float(a) for a in self.alpha],
            "utility": float(self.utility),
            "resolution": float(self.resolution),
            "grid_error": float(self.grid_error),
        }
        if self.p is not None:
            d["p"] = [float(q) for q in self.p]
        return d


def budget_dp(tables: np.ndarray):
    """Maximise ``sum_j tables[j, k_j]`` subject to ``sum_j k_j <= G - 1``.

    Returns ``(best value, chosen indices)``.
    """
    n, G = tables.shape
    best = tables[0].copy()  # best[b]: value using exactly b units so far
    choice = np.zeros((n, G), dtype=np.int64)
    choice[0] = np.arange(G)
    b = np.arange(G)
    k = np.arange(G)
    for j in range(1, n):
        new = np.empty(G)
        # cand[b, k] = best[b - k] + tables[j, k] for k <= b, in row blocks to bound memory
        for start in range(0, G, 512):
            rows = b[start:start + 512]
            idx = rows[:, None] - k[None, :]
            cand = np.where(idx >= 0, best[np.clip(idx, 0, None)] + tables[j][None, :], -np.inf)
            kb = np.argmax(cand, axis=1)
            choice[j, rows] = kb
            new[rows] = cand[np.arange(len(rows)), kb]
        best = new
    used = int(np.argmax(best))
    total = float(best[used])
    picks = np.zeros(n, dtype=np.int64)
    for j in range(n - 1, -1, -1):
        picks[j] = choice[j, used]
        used -= picks[j]
    return total, picks


def oracle_strict(workers: Sequence[WorkerParams], budget: float, grid: GridSpec = GridSpec()) -> OracleResult:
    workers = list(workers)
    if not workers:
        raise ValueError("need at least one worker")
    a = grid.alpha_grid(budget)
    tables = []
    lips = 0.0
    for w in workers:
        A, B = ab_coefficients(w)
        tables.append(a * w.lam**2 * w.mu**2 / (A + B * a))
        lips += w.lam**2 * w.mu**2 / A  # slope at 0 bounds the slope everywhere (concave)
    tables = np.array(tables)
    _, picks = budget_dp(tables)
    alpha = a[picks]
    util = float(sum(tables[j, k] for j, k in enumerate(picks)))
    step = a[1] - a[0]
    return OracleResult(alpha, util, step, lips * step, lipschitz=lips)


def _poly2(T: np.ndarray, a: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Evaluate ``sum T[i, k] a^i p^k`` on the outer grid ``a x p``."""
    return np.einsum("ik,ai,pk->ap", T, a[:, None] ** np.arange(T.shape[0]), p[:, None] ** np.arange(T.shape[1]))


def _exact_p_max(F: np.ndarray, G: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Continuous ``max_p f/g`` over ``[0, 1]`` at every ``a`` (quadratics in p)."""
    P = np.polynomial.polynomial
    out = np.empty(len(a))
    for t, av in enumerate(a):
        ai = av ** np.arange(F.shape[0])
        f, g = ai @ F, ai @ G
        cand = [0.0, 1.0]
        crit = P.polysub(P.polymul(P.polyder(f), g), P.polymul(f, P.polyder(g)))
        if np.any(np.abs(crit) > 0):
            r = P.polyroots(np.trim_zeros(crit, "b")) if len(np.trim_zeros(crit, "b")) > 1 else []
            cand += [float(x.real) for x in np.atleast_1d(r) if abs(x.imag) < 1e-12 and 0 < x.real < 1]
        cand = np.array(cand)
        out[t] = np.max(P.polyval(cand, f) / P.polyval(cand, g))
    return out


def oracle_moderate(
    workers: Sequence[WorkerParams],
    budget: float,
    grid: GridSpec = GridSpec(401, 101),
    p=None,
) -> OracleResult:
    """Grid optimum of the moderate objective.

    With ``p`` given, only the rates are searched (``p`` held fixed).
    """
    workers = list(workers)
    if not workers:
        raise ValueError("need at least one worker")
    a = grid.alpha_grid(budget)
    step = a[1] - a[0]
    fixed = p is not None
    pgrid = grid.p_grid()
    tables, pidx, err = [], [], 0.0
    for j, w in enumerate(workers):
        F, G = ratio_tables(w)
        ps_ = np.array([float(p[j])]) if fixed else pgrid
        vals = _poly2(F, a, ps_) / _poly2(G, a, ps_)
        k = np.argmax(vals, axis=1)
        best = vals[np.arange(len(a)), k]
        tables.append(best)
        pidx.append(ps_[k])
        # slope in alpha on each grid cell, bounded with f' at the right end over g at the left
        F1 = F[1:] * np.arange(1, F.shape[0])[:, None]
        pe = np.linspace(0.0, 1.0, grid.p_steps) if not fixed else ps_
        if fixed:
            slope = _poly2(F1, a[1:], pe) / _poly2(G, a[:-1], pe)
        else:
            slope = _poly2(F1, a[1:], pe[1:]) / _poly2(G, a[:-1], pe[:-1])
        err += float(np.max(slope)) * step
        if not fixed:
            err += float(np.max(_exact_p_max(F, G, a) - best))
    tables = np.array(tables)
    _, picks = budget_dp(tables)
    alpha = a[picks]
    pv = np.array([pidx[j][k] for j, k in enumerate(picks)])
    util = float(sum(tables[j, k] for j, k in enumerate(picks)))
    return OracleResult(alpha, util, step, max(err, 0.0), p=pv)


def brute_force_grid(tables: np.ndarray):
    """Plain enumeration of every grid allocation; reference for :func:`budget_dp`."""
    import itertools

    n, G = tables.shape
    best, arg = -np.inf, None
    for ks in itertools.product(range(G), repeat=n):
        if sum(ks) <= G - 1:
            v = sum(tables[j, k] for j, k in enumerate(ks))
            if v > best:
                best, arg = v, ks
    return float(best), np.array(arg)


# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    residual: float


@dataclass
class KKTReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "residual": c.residual} for c in self.checks],
        }


def verify_kkt(solution: StrictSolution, workers: Sequence[WorkerParams], budget: float,
               tol_budget: float = 1e-9, tol_stat: float = 1e-8) -> KKTReport:
    """Check a strict allocation against the optimality conditions. Never raises."""
    rep = KKTReport()
    try:
        alpha = np.asarray(solution.alpha, dtype=float)
        beta = float(solution.water_level)
        workers = list(workers)
        if alpha.shape != (len(workers),):
            rep.checks.append(Check("shape", False, float(abs(alpha.size - len(workers)))))
            return rep
        neg = float(max(0.0, -alpha.min()))
        rep.checks.append(Check("nonnegative", neg == 0.0, neg))
        over = float(alpha.sum() - budget)
        rep.checks.append(Check("within_budget", over <= tol_budget, max(over, 0.0)))
        rep.checks.append(Check("budget_binds", abs(over) <= tol_budget, abs(over)))
        rep.checks.append(Check("dual_feasible", beta > 0, max(0.0, -beta)))
        act = set(int(i) for i in np.flatnonzero(alpha > 0))
        declared = set(int(i) for i in solution.active_set)
        rep.checks.append(Check("active_set", act == declared, float(len(act ^ declared))))
        stat, slack = 0.0, 0.0
        for i, (w, a) in enumerate(zip(workers, alpha)):
            d = marginal_derivative(w, max(a, 0.0))
            if a > 0:
                stat = max(stat, abs(d - beta) / beta if beta > 0 else np.inf)
            else:
                slack = max(slack, d - beta)
        rep.checks.append(Check("stationarity", stat <= tol_stat, stat))
        rep.checks.append(Check("inactive_marginals", slack <= tol_stat, max(slack, 0.0)))
        rep.checks.append(_utility_check(solution.utility, total_strict_utility(workers, alpha)))
    except Exception as exc:  # report, never throw
        rep.checks.append(Check(f"error: {exc}", False, float("nan")))
    return rep


def _utility_check(stored, recomputed, tol: float = 1e-9) -> Check:
    drift = abs(float(stored) - float(recomputed)) / max(1.0, abs(float(recomputed)))
    return Check("utility_consistent", drift <= tol, drift)


def verify_moderate(policy: Policy, utility: float, workers: Sequence[WorkerParams], budget: float,
                    bounds: Optional[tuple] = None, rho: float = 1e-4, tol_budget: float = 1e-9) -> KKTReport:
    """Feasibility and bound certificate for a moderate policy. Never raises.

    The moderate problem is not concave, so there is no local optimality
    test. ``bounds = (lower, upper)`` from the final rate block of the
    branch-and-bound is checked instead: the stored utility must reach the
    lower bound (the later probability step can only raise it) and the
    bracket must be closed to the relative tolerance ``rho``.
    """
    rep = KKTReport()
    try:
        alpha, p = np.asarray(policy.alpha, float), np.asarray(policy.p, float)
        workers = list(workers)
        if alpha.shape != (len(workers),) or p.shape != alpha.shape:
            rep.checks.append(Check("shape", False, float(abs(alpha.size - len(workers)))))
            return rep
        neg = float(max(0.0, -alpha.min()))
        rep.checks.append(Check("nonnegative", neg == 0.0, neg))
        over = float(alpha.sum() - budget)
        rep.checks.append(Check("within_budget", over <= tol_budget, max(over, 0.0)))
        out = float(max(0.0, -p.min(), p.max() - 1.0))
        rep.checks.append(Check("p_in_box", out == 0.0, out))
        if neg == 0.0 and out == 0.0:
            rep.checks.append(_utility_check(utility, total_moderate_utility(workers, alpha, p)))
        else:
            rep.checks.append(Check("utility_consistent", False, float("nan")))
        if bounds is not None:
            lo, hi = map(float, bounds)
            tol = 1e-9 * max(1.0, abs(hi))
            short = max(0.0, lo - utility - tol)
            rep.checks.append(Check("reaches_lower_bound", short == 0.0, short))
            gap = (hi - lo) / max(abs(hi), 1e-300)
            rep.checks.append(Check("bound_gap", gap <= rho + 1e-12, max(gap, 0.0)))
    except Exception as exc:  # report, never throw
        rep.checks.append(Check(f"error: {exc}", False, float("nan")))
    return rep
