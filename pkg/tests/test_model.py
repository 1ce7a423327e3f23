from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import alphas, unit, worker
from exhaustalloc.model import (
    DegenerateChainError,
    Policy,
    StationaryDistribution,
    WorkerParams,
    ab_coefficients,
    build_generator,
    moderate_stationary,
    moderate_utility,
    ratio_tables,
    ratio_value,
    stationary_generic,
    stationary_strict_closed_form,
    strict_utility,
)


def frac(v):
    return np.array([float(Fraction(*x)) for x in v])


# --- exact fixtures ---------------------------------------------------------


def test_strict_distribution_small_integers():
    w = WorkerParams(2, 1)
    expected = frac([(1, 23), (2, 23), (4, 23), (12, 23), (4, 23)])
    np.testing.assert_allclose(stationary_strict_closed_form(w, 1.0).probs, expected, atol=1e-15)
    np.testing.assert_allclose(stationary_generic(build_generator(w, 1.0)).probs, expected, atol=1e-14)
    assert strict_utility(w, 1.0) == pytest.approx(4 / 23, abs=1e-15)


def test_moderate_distribution_small_integers():
    w = WorkerParams(2, 1, 0.7)
    expected = frac([(1, 49), (2, 49), (6, 49), (32, 49), (8, 49)])
    np.testing.assert_allclose(moderate_stationary(w, 1.0, 1.0).probs, expected, atol=1e-14)
    assert moderate_utility(w, 1.0, 1.0) == pytest.approx(13 / 49, abs=1e-14)


@pytest.mark.parametrize("ps, value", [(0.0, 6 / 49), (0.7, 13 / 49), (1.0, 16 / 49)])
def test_moderate_utility_in_ps(ps, value):
    assert moderate_utility(WorkerParams(2, 1, ps), 1.0, 1.0) == pytest.approx(value, abs=1e-14)


def test_zero_rate_never_leaves_fresh_states():
    w = WorkerParams(2, 1)
    np.testing.assert_allclose(stationary_strict_closed_form(w, 0.0).probs, [1 / 7, 2 / 7, 4 / 7, 0, 0], atol=1e-15)
    assert strict_utility(w, 0.0) == 0.0


def test_generator_rows_sum_to_zero():
    Q = build_generator(WorkerParams(3, 1, 0.4), 2.0, 0.5, mode="moderate")
    np.testing.assert_allclose(Q.sum(axis=1), 0.0, atol=1e-14)
    assert np.all(Q - np.diag(np.diag(Q)) >= 0)


def test_strict_generator_ignores_p():
    w = WorkerParams(3, 1, 0.4)
    np.testing.assert_array_equal(build_generator(w, 2.0, 0.0, "moderate"), build_generator(w, 2.0))


def test_two_p_variant_coefficients_differ_only_in_one_entry():
    w = WorkerParams(3, 2, 0.5)
    F, G = ratio_tables(w)
    Fp, Gp = ratio_tables(w, two_p=True)
    np.testing.assert_array_equal(F, Fp)
    diff = np.argwhere(G != Gp)
    assert diff.tolist() == [[1, 1]]


# --- validation -------------------------------------------------------------


@pytest.mark.parametrize("kw", [dict(lam=0, mu=1), dict(lam=1, mu=-1), dict(lam=2, mu=1, ps=1.5),
                                dict(lam=float("nan"), mu=1), dict(lam=1, mu=2)])
def test_worker_validation(kw):
    with pytest.raises(ValueError):
        WorkerParams(**kw)


def test_unstable_worker_needs_opt_in():
    with pytest.warns(UserWarning):
        w = WorkerParams(1, 2, allow_unstable=True)
    assert w.lam == 1


@pytest.mark.parametrize("alpha, p", [(-1.0, 0.0), (1.0, 1.5), (float("inf"), 0.0)])
def test_generator_rejects_bad_controls(alpha, p):
    with pytest.raises(ValueError):
        build_generator(WorkerParams(2, 1), alpha, p, "moderate")


def test_degenerate_generator():
    with pytest.raises(DegenerateChainError):
        stationary_generic(np.zeros((5, 5)))


def test_policy_validation():
    with pytest.raises(ValueError):
        Policy([1.0, -1.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        Policy([1.0], [0.0, 0.0])
    pol = Policy([1.0, 2.0], [0.0, 1.0])
    assert pol.within_budget(3.0) and not pol.within_budget(2.5)


def test_distribution_validation():
    with pytest.raises(ValueError):
        StationaryDistribution([0.5, 0.5])
    with pytest.raises(ValueError):
        StationaryDistribution([0.5, 0.5, 0.1, -0.1, 0.0])


# --- properties -------------------------------------------------------------


@given(worker(), alphas)
def test_closed_form_matches_generic(w, a):
    closed = stationary_strict_closed_form(w, a).probs
    generic = stationary_generic(build_generator(w, a)).probs
    np.testing.assert_allclose(closed, generic, atol=1e-10, rtol=0)


@given(worker(with_ps=True), alphas, unit)
def test_ratio_form_matches_balance(w, a, p):
    assert ratio_value(w, a, p) == pytest.approx(moderate_utility(w, a, p), abs=1e-9, rel=1e-9)


@given(worker(with_ps=True), alphas)
def test_p_zero_reduces_to_strict(w, a):
    np.testing.assert_allclose(moderate_stationary(w, a, 0.0).probs,
                               stationary_strict_closed_form(w, a).probs, atol=1e-12)
    assert moderate_utility(w, a, 0.0) == pytest.approx(strict_utility(w, a), abs=1e-12)


@given(worker(), st.floats(0.0, 10.0), st.floats(0.0, 10.0), st.floats(0.0, 1.0))
def test_strict_utility_concave(w, a, b, t):
    mid = strict_utility(w, t * a + (1 - t) * b)
    assert mid >= t * strict_utility(w, a) + (1 - t) * strict_utility(w, b) - 1e-12


@given(worker(), st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_strict_utility_increasing_and_bounded(w, a, b):
    lo, hi = sorted((a, b))
    assert strict_utility(w, lo) <= strict_utility(w, hi) + 1e-15
    A, B = ab_coefficients(w)
    assert strict_utility(w, hi) <= w.lam**2 * w.mu**2 / B + 1e-12


@given(worker(with_ps=True), st.floats(0.01, 10.0), unit, unit, unit)
def test_moderate_utility_monotone_in_ps(w, a, p, s1, s2):
    lo, hi = sorted((s1, s2))
    u_lo = moderate_utility(WorkerParams(w.lam, w.mu, lo), a, p)
    u_hi = moderate_utility(WorkerParams(w.lam, w.mu, hi), a, p)
    assert u_lo <= u_hi + 1e-12


@given(worker(with_ps=True), st.floats(0.01, 10.0), unit, st.floats(0.1, 10.0))
def test_rate_scaling(w, a, p, c):
    scaled = WorkerParams(c * w.lam, c * w.mu, w.ps)
    np.testing.assert_allclose(moderate_stationary(scaled, c * a, p).probs,
                               moderate_stationary(w, a, p).probs, atol=1e-10)
    assert moderate_utility(scaled, c * a, p) == pytest.approx(c * moderate_utility(w, a, p), rel=1e-9, abs=1e-12)


@given(worker(with_ps=True), alphas, unit)
def test_distribution_is_probability(w, a, p):
    pi = moderate_stationary(w, a, p).probs
    assert np.all(pi >= 0) and pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert pi[0] > 0
