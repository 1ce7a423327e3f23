import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import population
from exhaustalloc.model import WorkerParams, strict_utility, total_strict_utility
from exhaustalloc.oracle import verify_kkt
from exhaustalloc.strict import allocate_at_level, marginal_derivative, solve_strict, water_level


def test_identical_workers_split_evenly():
    workers = [WorkerParams(2.0, 1.0)] * 10
    sol = solve_strict(workers, 10.0)
    np.testing.assert_allclose(sol.alpha, 1.0, atol=1e-12)
    assert sol.utility == pytest.approx(40 / 23, abs=1e-12)
    assert sol.active_set == tuple(range(10))


def test_single_worker_takes_budget():
    sol = solve_strict([WorkerParams(3.0, 1.0)], 2.5)
    assert sol.alpha.tolist() == [2.5]
    assert sol.utility == pytest.approx(strict_utility(WorkerParams(3.0, 1.0), 2.5))


def test_weak_worker_is_switched_off():
    # a small budget goes entirely to the worker with the steepest marginal
    workers = [WorkerParams(10.0, 1.0), WorkerParams(1.01, 1.0)]
    sol = solve_strict(workers, 0.05)
    assert sol.alpha[1] == 0.0
    assert sol.alpha[0] == pytest.approx(0.05)
    assert 1 in sol.removed


def test_water_level_closed_form_two_identical():
    w = WorkerParams(2.0, 1.0)
    beta = water_level([w, w], 2.0)
    assert marginal_derivative(w, 1.0) == pytest.approx(beta, rel=1e-12)


def test_predict_at_level_reproduces_fit():
    workers = [WorkerParams(2.0 + i, 1.0 + 0.1 * i) for i in range(5)]
    sol = solve_strict(workers, 3.0)
    np.testing.assert_allclose(allocate_at_level(workers, sol.water_level), sol.alpha, atol=1e-10)


@pytest.mark.parametrize("budget", [0.0, -1.0, float("nan"), float("inf")])
def test_bad_budget(budget):
    with pytest.raises(ValueError):
        solve_strict([WorkerParams(2, 1)], budget)


def test_empty_population():
    with pytest.raises(ValueError):
        solve_strict([], 1.0)


def test_to_dict_roundtrip():
    sol = solve_strict([WorkerParams(2, 1), WorkerParams(4, 1)], 1.5)
    d = sol.to_dict()
    assert d["alpha"] == sol.alpha.tolist() and d["utility"] == sol.utility


@given(population(), st.floats(0.01, 50.0))
def test_solution_passes_certificate(workers, budget):
    sol = solve_strict(workers, budget)
    rep = verify_kkt(sol, workers, budget)
    assert rep.passed, rep.failed()
    assert sol.alpha.sum() == pytest.approx(budget, rel=1e-12)


@given(population(n_min=2), st.floats(0.01, 50.0))
def test_active_set_is_prefix_by_marginal_at_zero(workers, budget):
    # workers with a larger marginal at zero are never switched off before weaker ones
    sol = solve_strict(workers, budget)
    slope0 = np.array([marginal_derivative(w, 0.0) for w in workers])
    on = sol.alpha > 0
    if on.any() and (~on).any():
        assert slope0[on].min() >= slope0[~on].max() - 1e-12


@given(population(), st.floats(0.01, 20.0), st.floats(1.0, 3.0))
def test_utility_nondecreasing_in_budget(workers, budget, factor):
    assert solve_strict(workers, budget * factor).utility >= solve_strict(workers, budget).utility - 1e-12


@given(population(n_min=2, n_max=5), st.floats(0.1, 20.0), st.data())
def test_no_feasible_perturbation_does_better(workers, budget, data):
    sol = solve_strict(workers, budget)
    raw = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=len(workers), max_size=len(workers))))
    if raw.sum() == 0:
        return
    other = budget * raw / raw.sum()
    assert total_strict_utility(workers, other) <= sol.utility + 1e-10
