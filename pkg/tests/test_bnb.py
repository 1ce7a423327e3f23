import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import population
from exhaustalloc.bnb import (
    BOUNDS,
    InvalidProblemError,
    Simplex,
    SumOfRatiosProblem,
    bisect_longest_edge,
    branch_and_bound,
    initial_simplex,
    lower_bound,
    upper_bound,
)
from exhaustalloc.model import WorkerParams, ratio_coefficients
from exhaustalloc.moderate import alpha_problem
from exhaustalloc.strict import solve_strict


def strict_problem(workers, budget):
    num, den = zip(*(ratio_coefficients(w, 0.0) for w in workers))
    return SumOfRatiosProblem(np.array(num), np.array(den), budget=budget)


def sample_in(s: Simplex, rng, k=64):
    w = rng.dirichlet(np.ones(len(s.vertices)), size=k)
    return w @ s.vertices


# --- geometry ---------------------------------------------------------------


@given(st.integers(1, 5), st.floats(0.1, 10.0), st.integers(0, 6))
def test_bisection_halves_volume(n, budget, depth):
    s = initial_simplex(budget, n)
    for _ in range(depth):
        s = bisect_longest_edge(s)[0]
    a, b = bisect_longest_edge(s)
    assert a.volume() == pytest.approx(s.volume() / 2, rel=1e-9)
    assert b.volume() == pytest.approx(s.volume() / 2, rel=1e-9)


def test_children_cover_parent(rng):
    s = initial_simplex(2.0, 3)
    a, b = bisect_longest_edge(s)
    for x in sample_in(s, rng, 200):
        inside = []
        for child in (a, b):
            V = child.vertices
            lam = np.linalg.solve(np.vstack([V.T, np.ones(len(V))]), np.append(x, 1.0))
            inside.append(np.all(lam >= -1e-9))
        assert any(inside)


def test_longest_edge_tie_break_is_lexicographic():
    s = initial_simplex(1.0, 3)  # edges e_i - e_j all have length sqrt(2)
    _, i, j = s.longest_edge()
    assert (i, j) == (1, 2)


def test_bad_simplex_shape():
    with pytest.raises(ValueError):
        Simplex(np.zeros((2, 2)))


def test_problem_validation():
    with pytest.raises(InvalidProblemError):
        SumOfRatiosProblem(np.array([[1.0, -1.0]]), np.array([[1.0, 1.0]]), budget=1.0)
    with pytest.raises(InvalidProblemError):
        SumOfRatiosProblem(np.array([[0.0, 1.0]]), np.array([[0.0, 1.0]]), budget=1.0)
    with pytest.raises(InvalidProblemError):
        SumOfRatiosProblem(np.array([[0.0, 1.0]]), np.array([[1.0, 1.0]]))
    with pytest.raises(InvalidProblemError):
        SumOfRatiosProblem(np.array([[0.0, 1.0]]), np.array([[1.0, 1.0]]), budget=-1.0)


def test_invalid_options():
    prob = strict_problem([WorkerParams(2, 1)], 1.0)
    with pytest.raises(ValueError):
        branch_and_bound(prob, rho=0.0)
    with pytest.raises(ValueError):
        branch_and_bound(prob, bound="nope")
    with pytest.raises(ValueError):
        branch_and_bound(prob, selection="nope")
    with pytest.raises(ValueError):
        branch_and_bound(prob, x0=[5.0])


def test_projection_onto_budget():
    prob = strict_problem([WorkerParams(2, 1)] * 3, 1.0)
    x = prob.project([2.0, 0.0, -1.0])
    np.testing.assert_allclose(x, [1.0, 0.0, 0.0])
    assert prob.feasible(prob.project([0.5, 0.7, 0.9]))


# --- bounds -----------------------------------------------------------------


@given(population(n_min=1, n_max=3, with_ps=True), st.floats(0.5, 10.0), st.integers(0, 8),
       st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_upper_bound_is_sound(workers, budget, depth, seed, p):
    rng = np.random.default_rng(seed)
    prob = alpha_problem(workers, budget, np.full(len(workers), p))
    s = prob.simplex0
    for _ in range(depth):
        s = bisect_longest_edge(s)[rng.integers(2)]
    pts = sample_in(s, rng)
    vals = prob.value(pts)
    for b in BOUNDS:
        assert upper_bound(s, prob, b) >= vals.max() - 1e-10 * max(1.0, vals.max())
    lb, x = lower_bound(s, prob)
    assert prob.feasible(x) and prob.value(x) == pytest.approx(lb)


@given(population(n_min=1, n_max=3, with_ps=True), st.floats(0.5, 10.0), st.integers(0, 2**32 - 1))
def test_gap_vanishes_on_small_cells(workers, budget, seed):
    # the raw bound need not shrink at every split (the search clips it to the
    # parent's), but it must close up as the cell does
    rng = np.random.default_rng(seed)
    prob = alpha_problem(workers, budget, np.ones(len(workers)))
    s = prob.simplex0
    for _ in range(12 * len(workers)):
        s = bisect_longest_edge(s)[rng.integers(2)]
    ub = upper_bound(s, prob, "combined")
    lb, _ = lower_bound(s, prob)
    assert lb - 1e-12 <= ub <= lb + 1e-2 * max(abs(ub), 1e-3)


# --- search -----------------------------------------------------------------


@settings(max_examples=30)
@given(population(n_min=1, n_max=3), st.floats(0.5, 10.0))
def test_bnb_recovers_concave_optimum(workers, budget):
    rep = branch_and_bound(strict_problem(workers, budget), rho=1e-4)
    ref = solve_strict(workers, budget).utility
    assert rep.converged
    assert rep.lower_bound <= ref + 1e-9
    assert rep.upper_bound >= ref - 1e-9
    assert rep.lower_bound >= ref * (1 - 1e-4) - 1e-12


def test_trace_is_monotone():
    workers = [WorkerParams(2.5, 1, 0.7), WorkerParams(3.0, 1, 0.7), WorkerParams(3.5, 1, 0.7)]
    rep = branch_and_bound(alpha_problem(workers, 5.0, np.ones(3)), record_trace=True, polish=False)
    lbs, ubs = np.array(rep.trace).T
    assert np.all(np.diff(lbs) >= -1e-15)
    assert np.all(np.diff(ubs) <= 1e-15)
    assert rep.converged and rep.gap <= 1e-4 * rep.upper_bound + 1e-12


@pytest.mark.parametrize("bound", BOUNDS)
@pytest.mark.parametrize("selection", ["longest_edge", "best_bound"])
def test_bound_and_selection_variants_agree(bound, selection):
    workers = [WorkerParams(3.0, 1.0), WorkerParams(6.0, 2.0)]
    rep = branch_and_bound(strict_problem(workers, 2.0), rho=1e-3, bound=bound, selection=selection,
                           max_nodes=200_000)
    assert rep.lower_bound == pytest.approx(solve_strict(workers, 2.0).utility, rel=1e-3)


def test_node_cap_reports_nonconvergence():
    workers = [WorkerParams(2.5, 1, 0.7), WorkerParams(3.0, 1, 0.7), WorkerParams(3.5, 1, 0.7)]
    rep = branch_and_bound(alpha_problem(workers, 10.0, np.ones(3)), rho=1e-8, max_nodes=20,
                           bound="vertex", polish=False)
    assert not rep.converged
    assert rep.lower_bound <= rep.upper_bound


def test_box_problem_one_dimension():
    # p-block of a single worker with ps = 1: pushing p to 1 is optimal
    from exhaustalloc.moderate import p_problem
    rep = branch_and_bound(p_problem([WorkerParams(3, 1, 1.0)], [1.0]))
    assert rep.best_point[0] == pytest.approx(1.0)


def test_report_to_dict():
    rep = branch_and_bound(strict_problem([WorkerParams(2, 1)], 1.0))
    d = rep.to_dict()
    assert set(d) >= {"best_point", "lower_bound", "upper_bound", "converged", "nodes_explored"}
