"""Simplicial branch-and-bound for separable sums of polynomial ratios.

The objective is ``F(x) = sum_j f_j(x_j) / g_j(x_j)`` where ``f_j`` and ``g_j``
are polynomials with nonnegative coefficients and ``x >= 0``. Such
polynomials are convex and nondecreasing on the domain, which is what makes
the bounds below valid.

Feasible regions are either a budget simplex ``{x >= 0, sum(x) <= C}`` or a
box ``{0 <= x <= u}``.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

BOUNDS = ("vertex", "secant", "combined")
SELECTIONS = ("longest_edge", "best_bound")


class InvalidProblemError(ValueError):
    pass


# ---------------------------------------------------------------------------
# polynomial helpers; coefficient arrays are (m, D) ascending in degree


def _polyval(coef: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate row ``j`` of ``coef`` at ``x[..., j]`` (Horner)."""
    out = np.zeros(np.broadcast_shapes(x.shape, coef.shape[:1]))
    for d in range(coef.shape[1] - 1, -1, -1):
        out = out * x + coef[:, d]
    return out


def _polyder(coef: np.ndarray) -> np.ndarray:
    D = coef.shape[1]
    if D == 1:
        return np.zeros_like(coef)
    return coef[:, 1:] * np.arange(1, D)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Simplex:
    vertices: np.ndarray  # (n + 1, n)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise ValueError(f"a simplex in R^n needs n+1 vertices, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def volume(self) -> float:
        V = self.vertices
        return abs(np.linalg.det(V[1:] - V[0])) / math.factorial(self.dim)

    def longest_edge(self):
        """Return ``(length, i, j)``; ties go to the lexicographically smallest pair."""
        V = self.vertices
        diff = V[:, None, :] - V[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        best, bi, bj = -1.0, 0, 1
        k = len(V)
        for i in range(k):
            for j in range(i + 1, k):
                if d2[i, j] > best * (1 + 1e-12):
                    best, bi, bj = d2[i, j], i, j
        return math.sqrt(best), bi, bj


def initial_simplex(budget: float, n: int) -> Simplex:
    """Vertices ``0`` and ``budget * e_i``: exactly the budget region."""
    if budget <= 0 or n < 1:
        raise ValueError("need budget > 0 and n >= 1")
    V = np.zeros((n + 1, n))
    V[1:] = budget * np.eye(n)
    return Simplex(V)


def bisect_longest_edge(s: Simplex):
    _, i, j = s.longest_edge()
    V = s.vertices
    mid = 0.5 * (V[i] + V[j])
    a = V.copy()
    a[j] = mid
    b = V.copy()
    b[i] = mid
    return Simplex(a), Simplex(b)


@dataclass(frozen=True)
class SumOfRatiosProblem:
    """Maximise ``sum_j num_j(x_j) / den_j(x_j)`` over a budget simplex or a box."""

    num: np.ndarray
    den: np.ndarray
    budget: Optional[float] = None
    upper: Optional[np.ndarray] = None
    simplex0: Optional[Simplex] = None

    def __post_init__(self):
        num = np.atleast_2d(np.asarray(self.num, dtype=float))
        den = np.atleast_2d(np.asarray(self.den, dtype=float))
        if num.shape[0] != den.shape[0]:
            raise InvalidProblemError("numerator and denominator count differ")
        if np.any(num < 0) or np.any(den < 0):
            raise InvalidProblemError("ratio polynomials must have nonnegative coefficients")
        if np.any(den[:, 0] <= 0):
            raise InvalidProblemError("denominators must be positive at 0")
        if (self.budget is None) == (self.upper is None):
            raise InvalidProblemError("give exactly one of budget or upper")
        n = num.shape[0]
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        if self.budget is not None:
            if self.budget <= 0:
                raise InvalidProblemError("budget must be positive")
            s0 = self.simplex0 or initial_simplex(self.budget, n)
        else:
            up = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
            if np.any(up <= 0):
                raise InvalidProblemError("box upper bounds must be positive")
            object.__setattr__(self, "upper", up)
            if self.simplex0 is not None:
                s0 = self.simplex0
            elif n == 1:
                s0 = Simplex([[0.0], [up[0]]])
            else:
                # {x >= 0, sum(x) <= sum(u)} contains the box
                s0 = initial_simplex(float(up.sum()), n)
        object.__setattr__(self, "simplex0", s0)
        P = np.polynomial.polynomial
        base, sq = [], []
        for f, g in zip(num, den):
            base.append(P.polysub(P.polymul(P.polyder(f), g), P.polymul(f, P.polyder(g))))
            sq.append(P.polymul(g, g))
        K = max(max(len(b) for b in base), max(len(q) for q in sq))
        object.__setattr__(self, "crit_base", np.array([np.pad(b, (0, K - len(b))) for b in base]))
        object.__setattr__(self, "den_sq", np.array([np.pad(q, (0, K - len(q))) for q in sq]))

    @property
    def n(self) -> int:
        return self.num.shape[0]

    @property
    def scale(self) -> float:
        return float(self.budget if self.budget is not None else self.upper.max())

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.sum(_polyval(self.num, x) / _polyval(self.den, x), axis=-1)

    def feasible(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < -tol):
            return False
        if self.budget is not None:
            return float(x.sum()) <= self.budget * (1 + tol) + tol
        return bool(np.all(x <= self.upper + tol))

    def project(self, x) -> np.ndarray:
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        if self.upper is not None:
            return np.minimum(x, self.upper)
        if x.sum() <= self.budget:
            return x
        # Euclidean projection onto {x >= 0, sum x = C}
        u = np.sort(x)[::-1]
        css = np.cumsum(u) - self.budget
        k = np.arange(1, len(u) + 1)
        rho = np.flatnonzero(u - css / k > 0)[-1]
        return np.maximum(x - css[rho] / (rho + 1), 0.0)

    def contains_simplex(self, s: Simplex) -> bool:
        return all(self.feasible(v, tol=1e-12) for v in s.vertices)

    def intersects(self, s: Simplex) -> bool:
        """Whether conv(vertices) meets the feasible region (LP feasibility)."""
        V = s.vertices
        if self.contains_simplex(s):
            return True
        k = len(V)
        # convex weights w: V^T w in region
        A_eq = np.ones((1, k))
        if self.budget is not None:
            A_ub = np.vstack([-V.T, V.sum(axis=1)[None, :]])
            b_ub = np.concatenate([np.zeros(self.n), [self.budget]])
        else:
            A_ub = np.vstack([-V.T, V.T])
            b_ub = np.concatenate([np.zeros(self.n), self.upper])
        res = linprog(np.zeros(k), A_ub=A_ub, b_ub=b_ub + 1e-12, A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * k, method="highs")
        return res.status == 0

    def g_floor(self) -> np.ndarray:
        # den is nondecreasing on x >= 0, so its minimum over the region is at 0
        return self.den[:, 0].copy()


# ---------------------------------------------------------------------------
# bounds


def _vertex_bound(problem: SumOfRatiosProblem, s: Simplex) -> float:
    V = s.vertices
    fmax = np.max(_polyval(problem.num, V), axis=0)
    c = s.centroid
    gc = _polyval(problem.den, c)
    dg = _polyval(_polyder(problem.den), c)
    # tangent of a convex g underestimates it; minimise the tangent over vertices
    m = np.min(gc + dg * (V - c), axis=0)
    m = np.maximum(m, problem.g_floor())
    if np.any(m <= 0):
        raise InvalidProblemError("denominator lower bound is not positive")
    return float(np.sum(np.maximum(fmax, 0.0) / m))


def _real_roots_in(c: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Real roots in ``(lo, hi)`` of the polynomial with ascending coefficients ``c``."""
    scale = np.max(np.abs(c))
    if scale == 0:
        return np.empty(0)
    nz = np.flatnonzero(np.abs(c) > 1e-14 * scale)
    c = c[: nz[-1] + 1]
    deg = len(c) - 1
    if deg < 1:
        return np.empty(0)
    comp = np.zeros((deg, deg))
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    roots = np.linalg.eigvals(comp)
    roots = roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real))].real
    return roots[(roots > lo) & (roots < hi)]


def _secant_bound(problem: SumOfRatiosProblem, s: Simplex) -> float:
    V = s.vertices
    lo = V.min(axis=0)
    hi = V.max(axis=0)
    r_lo = _polyval(problem.num, lo) / _polyval(problem.den, lo)
    r_hi = _polyval(problem.num, hi) / _polyval(problem.den, hi)
    width = hi - lo
    slope = np.divide(r_hi - r_lo, width, out=np.zeros_like(width), where=width > 0)
    # sum_j of the secants is affine, so its max over the simplex sits at a vertex
    lin = np.max(np.sum(r_lo + slope * (V - lo), axis=1))
    # interior extrema of r - secant solve f'g - fg' - slope g^2 = 0
    crit = problem.crit_base - slope[:, None] * problem.den_sq
    slack = 0.0
    for j in range(problem.n):
        if width[j] <= 0:
            continue
        x = _real_roots_in(crit[j], lo[j], hi[j])
        if x.size:
            rj = _polyval(problem.num[j:j + 1], x[:, None])[:, 0] / _polyval(problem.den[j:j + 1], x[:, None])[:, 0]
            slack += max(0.0, float(np.max(rj - r_lo[j] - slope[j] * (x - lo[j]))))
    bound = float(lin + slack)
    return bound + 1e-12 * (1.0 + abs(bound))


def upper_bound(s: Simplex, problem: SumOfRatiosProblem, bound: str = "combined") -> float:
    """Upper bound on ``F`` over ``s`` intersected with the feasible region.

    ``vertex``: largest numerator over the vertices divided by the smallest
    tangent-plane value of the denominator. ``secant``: per-coordinate secant
    plus the exact excess of each ratio over it. ``combined`` takes the minimum.
    """
    if bound not in BOUNDS:
        raise ValueError(f"unknown bound {bound!r}")
    if bound == "vertex":
        return _vertex_bound(problem, s)
    sb = _secant_bound(problem, s)
    if bound == "secant":
        return sb
    return min(sb, _vertex_bound(problem, s))


def lower_bound(s: Simplex, problem: SumOfRatiosProblem):
    """Best objective over the vertices and centroid, each projected to the region."""
    cand = np.vstack([s.vertices, s.centroid[None, :]])
    cand = np.array([problem.project(c) for c in cand])
    vals = problem.value(cand)
    k = int(np.argmax(vals))
    return float(vals[k]), cand[k]


# ---------------------------------------------------------------------------


@dataclass
class BnBNode:
    simplex: Simplex
    upper_bound: float
    best_point: np.ndarray
    lower_bound: float
    edge: float


@dataclass
class BnBReport:
    best_point: np.ndarray
    lower_bound: float
    upper_bound: float
    iterations: int
    nodes_explored: int
    converged: bool
    trace: List[tuple] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.upper_bound - self.lower_bound

    def to_dict(self) -> dict:
        return {
            "best_point": [float(v) for v in self.best_point],
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "iterations": self.iterations,
            "nodes_explored": self.nodes_explored,
            "converged": self.converged,
        }


def _polish(problem: SumOfRatiosProblem, x0: np.ndarray):
    """Local ascent from ``x0``; returns ``(value, point)`` or None."""
    n = problem.n
    if problem.budget is not None:
        bounds = [(0.0, problem.budget)] * n
        cons = [{"type": "ineq", "fun": lambda x: problem.budget - np.sum(x),
                 "jac": lambda x: -np.ones(n)}]
    else:
        bounds = [(0.0, float(u)) for u in problem.upper]
        cons = []
    num1, den1 = _polyder(problem.num), _polyder(problem.den)

    def fun(x):
        f, g = _polyval(problem.num, x), _polyval(problem.den, x)
        grad = (_polyval(num1, x) * g - f * _polyval(den1, x)) / g**2
        return -np.sum(f / g), -grad

    try:
        res = minimize(fun, x0, jac=True, method="SLSQP", bounds=bounds, constraints=cons,
                       options={"ftol": 1e-14, "maxiter": 200})
    except (ValueError, FloatingPointError):  # pragma: no cover
        return None
    x = problem.project(res.x)
    if not problem.feasible(x):
        return None
    return float(problem.value(x)), x


def branch_and_bound(
    problem: SumOfRatiosProblem,
    rho: float = 1e-4,
    max_nodes: int = 1_000_000,
    max_iter: Optional[int] = None,
    bound: str = "combined",
    selection: str = "longest_edge",
    x0: Optional[Sequence[float]] = None,
    polish: bool = True,
    record_trace: bool = False,
    degeneracy: float = 1e-9,
) -> BnBReport:
    """Maximise a separable sum of ratios to relative tolerance ``rho``.

    A node stops being split once ``UB(S) - LB <= rho * UB(S)`` and is
    discarded once ``UB(S) <= LB``. ``x0`` seeds the incumbent.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if selection not in SELECTIONS:
        raise ValueError(f"unknown selection rule {selection!r}")
    if bound not in BOUNDS:
        raise ValueError(f"unknown bound {bound!r}")
    floor_edge = degeneracy * problem.scale
    counter = itertools.count()

    best_val, best_x = -math.inf, None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if not problem.feasible(x0, tol=1e-9):
            raise ValueError("warm-start point is infeasible")
        x0 = problem.project(x0)
        best_val, best_x = float(problem.value(x0)), x0

    def make_node(s: Simplex, parent_ub: float = math.inf) -> Optional[BnBNode]:
        nonlocal best_val, best_x
        if not problem.contains_simplex(s) and not problem.intersects(s):
            return None
        ub = min(upper_bound(s, problem, bound), parent_ub)
        lb, pt = lower_bound(s, problem)
        if lb > best_val:
            best_val, best_x = lb, pt
        edge, _, _ = s.longest_edge()
        return BnBNode(s, ub, pt, lb, edge)

    root = make_node(problem.simplex0)
    if root is None:
        raise InvalidProblemError("initial simplex misses the feasible region")
    if polish:
        got = _polish(problem, best_x)
        if got is not None and got[0] > best_val:
            best_val, best_x = got

    def key(node: BnBNode):
        return -node.edge if selection == "longest_edge" else -node.upper_bound

    open_heap: list = []  # nodes still to split
    ub_heap: list = []  # every live node, for the global upper bound
    alive = {}

    def settle(node: BnBNode):
        if node.upper_bound <= best_val:
            return
        nid = next(counter)
        if node.upper_bound - best_val <= rho * node.upper_bound or node.edge < floor_edge:
            # fathomed: keep only its bound
            alive[nid] = node
            heapq.heappush(ub_heap, (-node.upper_bound, nid))
            return
        alive[nid] = node
        heapq.heappush(ub_heap, (-node.upper_bound, nid))
        heapq.heappush(open_heap, (key(node), nid))

    def global_ub() -> float:
        while ub_heap:
            negub, nid = ub_heap[0]
            if nid not in alive or -negub <= best_val:
                heapq.heappop(ub_heap)
                alive.pop(nid, None)
                continue
            return -negub
        return best_val

    settle(root)
    nodes = 1
    it = 0
    trace = []
    while True:
        gub = max(global_ub(), best_val)
        if record_trace:
            trace.append((best_val, gub))
        if gub - best_val <= rho * abs(gub):
            break
        if not open_heap:
            break  # only fathomed or degenerate leaves remain
        if nodes >= max_nodes or (max_iter is not None and it >= max_iter):
            break
        _, nid = heapq.heappop(open_heap)
        node = alive.get(nid)
        if node is None:
            continue
        if node.upper_bound <= best_val:
            alive.pop(nid)
            continue
        if node.upper_bound - best_val <= rho * node.upper_bound:
            continue  # became fathomed after the incumbent improved; bound stays in ub_heap
        it += 1
        alive.pop(nid)
        for child in bisect_longest_edge(node.simplex):
            nodes += 1
            c = make_node(child, node.upper_bound)
            if c is not None:
                settle(c)

    if polish and best_x is not None:
        got = _polish(problem, best_x)
        if got is not None and got[0] > best_val:
            best_val, best_x = got
    gub = max(global_ub(), best_val)
    converged = gub - best_val <= rho * abs(gub) + 1e-12
    if record_trace:
        trace.append((best_val, gub))
    return BnBReport(
        best_point=best_x,
        lower_bound=best_val,
        upper_bound=gub,
        iterations=it,
        nodes_explored=nodes,
        converged=converged,
        trace=trace,
    )
