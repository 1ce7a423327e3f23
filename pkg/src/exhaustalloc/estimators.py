"""scikit-learn style wrappers around the allocation solvers.

``X`` is a worker table with one row per worker and columns
``(lambda, mu)`` or ``(lambda, mu, ps)``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .model import Policy, WorkerParams, total_moderate_utility, total_strict_utility
from .moderate import DEFAULT_EPS, DEFAULT_MAX_OUTER, DEFAULT_NODE_CAP, DEFAULT_RHO, alternating_solve
from .strict import allocate_at_level, solve_strict


def check_workers(X, allow_unstable: bool = False, require_ps: bool = False):
    """Validate a worker table and turn it into :class:`WorkerParams`."""
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], WorkerParams):
        return list(X)
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] not in (2, 3):
        raise ValueError(f"worker table needs 2 or 3 columns (lambda, mu[, ps]), got {X.shape[1]}")
    if require_ps and X.shape[1] != 3:
        raise ValueError("moderate allocation needs a ps column")
    ps = X[:, 2] if X.shape[1] == 3 else np.zeros(len(X))
    return [WorkerParams(l, m, s, allow_unstable=allow_unstable) for l, m, s in zip(X[:, 0], X[:, 1], ps)]


def check_budget(budget) -> float:
    budget = float(budget)
    if not np.isfinite(budget) or budget <= 0:
        raise ValueError(f"budget must be a positive finite number, got {budget}")
    return budget


class StrictAllocator(BaseEstimator):
    """Water-filling allocation of a sampling budget.

    After ``fit`` the estimator holds ``alpha_``, ``water_level_``,
    ``active_set_`` and ``utility_``. ``predict`` allocates any worker table
    at the fitted water level, which reproduces ``alpha_`` on the training
    table.
    """

    def __init__(self, budget=1.0, allow_unstable=False):
        self.budget = budget
        self.allow_unstable = allow_unstable

    def fit(self, X, y=None):
        workers = check_workers(X, self.allow_unstable)
        sol = solve_strict(workers, check_budget(self.budget))
        self.solution_ = sol
        self.alpha_ = sol.alpha
        self.water_level_ = sol.water_level
        self.active_set_ = sol.active_set
        self.utility_ = sol.utility
        self.n_workers_ = len(workers)
        return self

    def predict(self, X):
        check_is_fitted(self, "water_level_")
        return allocate_at_level(check_workers(X, self.allow_unstable), self.water_level_)

    def score(self, X, y=None):
        """Total success rate of the fitted allocation on ``X``."""
        check_is_fitted(self, "alpha_")
        workers = check_workers(X, self.allow_unstable)
        if len(workers) != self.n_workers_:
            raise ValueError("score needs the table the allocator was fitted on")
        return total_strict_utility(workers, self.alpha_)


class ModerateAllocator(BaseEstimator):
    """Joint rate / assignment-probability allocation by alternating branch-and-bound."""

    def __init__(self, budget=1.0, rho=DEFAULT_RHO, eps=DEFAULT_EPS, max_outer=DEFAULT_MAX_OUTER,
                 node_cap=DEFAULT_NODE_CAP, p_init=None, bound="combined", selection="longest_edge",
                 separable_p=True, allow_unstable=False):
        self.budget = budget
        self.rho = rho
        self.eps = eps
        self.max_outer = max_outer
        self.node_cap = node_cap
        self.p_init = p_init
        self.bound = bound
        self.selection = selection
        self.separable_p = separable_p
        self.allow_unstable = allow_unstable

    def fit(self, X, y=None):
        workers = check_workers(X, self.allow_unstable, require_ps=True)
        policy, utility, report = alternating_solve(
            workers, check_budget(self.budget), rho=self.rho, eps=self.eps, max_outer=self.max_outer,
            node_cap=self.node_cap, p_init=self.p_init, separable_p=self.separable_p,
            bound=self.bound, selection=self.selection,
        )
        self.policy_ = policy
        self.alpha_ = policy.alpha
        self.p_ = policy.p
        self.utility_ = utility
        self.report_ = report
        self.converged_ = report.converged and report.all_blocks_converged
        self.n_workers_ = len(workers)
        return self

    def predict(self, X=None):
        """Fitted policy as an ``(n, 2)`` array of ``(alpha, p)`` rows."""
        check_is_fitted(self, "policy_")
        return np.column_stack([self.alpha_, self.p_])

    def score(self, X, y=None):
        check_is_fitted(self, "policy_")
        workers = check_workers(X, self.allow_unstable, require_ps=True)
        if len(workers) != self.n_workers_:
            raise ValueError("score needs the table the allocator was fitted on")
        return total_moderate_utility(workers, self.alpha_, self.p_)


__all__ = ["StrictAllocator", "ModerateAllocator", "check_workers", "check_budget", "Policy"]
