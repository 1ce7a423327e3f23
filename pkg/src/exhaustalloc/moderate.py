"""Joint sampling-rate / assignment-probability optimisation.

Alternates between the rates (branch-and-bound over the budget simplex with
``p`` fixed) and the assignment probabilities (branch-and-bound over
``[0, 1]`` per worker with the rates fixed) until the utility settles.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .bnb import BnBReport, SumOfRatiosProblem, branch_and_bound
from .model import Policy, WorkerParams, p_ratio_coefficients, ratio_coefficients, total_moderate_utility

log = logging.getLogger(__name__)

DEFAULT_RHO = 1e-4
DEFAULT_EPS = 1e-6
DEFAULT_MAX_OUTER = 50
DEFAULT_NODE_CAP = 1_000_000


@dataclass
class AlternatingReport:
    trace: List[float]
    converged: bool
    outer_iterations: int
    p_init: List[float]
    alpha_reports: List[BnBReport] = field(default_factory=list)
    p_reports: List[List[BnBReport]] = field(default_factory=list)

    @property
    def all_blocks_converged(self) -> bool:
        blocks = list(self.alpha_reports) + [r for rs in self.p_reports for r in rs]
        return all(r.converged for r in blocks)

    def to_dict(self) -> dict:
        return {
            "trace": [float(u) for u in self.trace],
            "converged": self.converged,
            "outer_iterations": self.outer_iterations,
            "p_init": list(self.p_init),
            "blocks_converged": self.all_blocks_converged,
            "alpha_nodes": [r.nodes_explored for r in self.alpha_reports],
        }


def alpha_problem(workers: Sequence[WorkerParams], budget: float, p) -> SumOfRatiosProblem:
    num, den = zip(*(ratio_coefficients(w, float(q)) for w, q in zip(workers, p)))
    return SumOfRatiosProblem(np.array(num), np.array(den), budget=budget)


def p_problem(workers: Sequence[WorkerParams], alpha) -> SumOfRatiosProblem:
    num, den = zip(*(p_ratio_coefficients(w, float(a)) for w, a in zip(workers, alpha)))
    return SumOfRatiosProblem(np.array(num), np.array(den), upper=np.ones(len(workers)))


def optimize_alpha_given_p(workers, budget, p, rho=DEFAULT_RHO, alpha0=None, **bnb_kw) -> BnBReport:
    return branch_and_bound(alpha_problem(workers, budget, p), rho=rho, x0=alpha0, **bnb_kw)


def optimize_p_given_alpha(
    workers: Sequence[WorkerParams],
    alpha,
    rho: float = DEFAULT_RHO,
    p0=None,
    separable: bool = True,
    **bnb_kw,
):
    """Best assignment probabilities for fixed rates.

    Each worker's ratio only involves its own ``p_i``, so by default every
    coordinate is a one-dimensional search on ``[0, 1]``. ``separable=False``
    runs one search over a simplex covering the unit cube instead.
    Workers with zero rate keep their previous probability.

    Returns ``(p, reports)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    n = len(workers)
    p_prev = np.ones(n) if p0 is None else np.clip(np.asarray(p0, dtype=float), 0.0, 1.0)
    if not separable:
        rep = branch_and_bound(p_problem(workers, alpha), rho=rho, x0=p_prev, **bnb_kw)
        p = np.clip(rep.best_point, 0.0, 1.0)
        p[alpha == 0] = p_prev[alpha == 0]
        return p, [rep]
    p = p_prev.copy()
    reports = []
    for i, (w, a) in enumerate(zip(workers, alpha)):
        if a == 0:
            continue
        rep = branch_and_bound(p_problem([w], [a]), rho=rho, x0=[p_prev[i]], **bnb_kw)
        p[i] = float(np.clip(rep.best_point[0], 0.0, 1.0))
        reports.append(rep)
    return p, reports


def alternating_solve(
    workers: Sequence[WorkerParams],
    budget: float,
    rho: float = DEFAULT_RHO,
    eps: float = DEFAULT_EPS,
    max_outer: int = DEFAULT_MAX_OUTER,
    node_cap: int = DEFAULT_NODE_CAP,
    p_init=None,
    separable_p: bool = True,
    bound: str = "combined",
    selection: str = "longest_edge",
):
    """Block-coordinate ascent over ``(alpha, p)``.

    Each block search is seeded with the current point, so the recorded
    utility never decreases. Returns ``(policy, utility, report)``.
    """
    workers = list(workers)
    n = len(workers)
    if n == 0:
        raise ValueError("need at least one worker")
    if not np.isfinite(budget) or budget <= 0:
        raise ValueError(f"budget must be a positive finite number, got {budget}")
    p = np.ones(n) if p_init is None else np.clip(np.asarray(p_init, dtype=float), 0.0, 1.0)
    if p.shape != (n,):
        raise ValueError("p_init length must match the worker count")
    kw = dict(max_nodes=node_cap, bound=bound, selection=selection)
    report = AlternatingReport(trace=[], converged=False, outer_iterations=0, p_init=p.tolist())
    alpha = None
    prev = None
    for it in range(max_outer):
        arep = optimize_alpha_given_p(workers, budget, p, rho=rho, alpha0=alpha, **kw)
        alpha = np.asarray(arep.best_point, dtype=float)
        p, preps = optimize_p_given_alpha(workers, alpha, rho=rho, p0=p, separable=separable_p, **kw)
        u = total_moderate_utility(workers, alpha, p)
        report.alpha_reports.append(arep)
        report.p_reports.append(preps)
        report.trace.append(u)
        report.outer_iterations = it + 1
        if prev is not None and abs(u - prev) <= eps:
            report.converged = True
            break
        prev = u
    if not report.converged:
        log.warning("alternating loop stopped after %d rounds without settling", max_outer)
    policy = Policy(alpha=np.clip(alpha, 0.0, None), p=p)
    return policy, total_moderate_utility(workers, policy.alpha, policy.p), report
