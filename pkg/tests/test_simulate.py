import numpy as np
import pytest

from exhaustalloc.model import Policy, WorkerParams, moderate_stationary, moderate_utility, strict_utility
from exhaustalloc.simulate import SimConfig, simulate_system, simulate_worker

SHORT = SimConfig(horizon=2e5, seed=7)


def test_strict_worker_matches_analytic():
    w = WorkerParams(2.0, 1.0)
    st = simulate_worker(w, 1.0, cfg=SHORT)
    assert abs(st.success_rate - strict_utility(w, 1.0)) <= 4 * st.stderr
    pi = moderate_stationary(w, 1.0, 0.0).probs
    assert np.all(np.abs(st.occupancy - pi) <= np.maximum(5 * st.occupancy_stderr, 5e-3))
    assert st.occupancy.sum() == pytest.approx(1.0, abs=1e-9)


def test_moderate_worker_matches_analytic():
    w = WorkerParams(3.0, 1.0, 0.7)
    st = simulate_worker(w, 1.5, 0.8, mode="moderate", cfg=SHORT)
    assert abs(st.success_rate - moderate_utility(w, 1.5, 0.8)) <= 4 * st.stderr
    assert st.assign_rate >= st.success_rate


def test_same_seed_same_path():
    w = WorkerParams(2.0, 1.0, 0.5)
    a = simulate_worker(w, 1.0, 0.5, "moderate", SimConfig(horizon=1e4, seed=3))
    b = simulate_worker(w, 1.0, 0.5, "moderate", SimConfig(horizon=1e4, seed=3))
    assert a.to_dict() == b.to_dict()
    c = simulate_worker(w, 1.0, 0.5, "moderate", SimConfig(horizon=1e4, seed=4))
    assert c.success_rate != a.success_rate


def test_strict_mode_ignores_p():
    w = WorkerParams(2.0, 1.0, 0.5)
    cfg = SimConfig(horizon=1e4, seed=1)
    assert simulate_worker(w, 1.0, 0.9, "strict", cfg).to_dict() == simulate_worker(w, 1.0, 0.0, "moderate", cfg).to_dict()


def test_zero_rate_never_succeeds():
    st = simulate_worker(WorkerParams(2.0, 1.0), 0.0, cfg=SimConfig(horizon=1e4))
    assert st.success_rate == 0.0 and st.samples == 0


def test_workers_use_independent_streams():
    w = WorkerParams(2.0, 1.0)
    sysst = simulate_system([w, w], Policy([1.0, 1.0], [0.0, 0.0]), cfg=SimConfig(horizon=1e4))
    assert sysst.workers[0].success_rate != sysst.workers[1].success_rate
    assert sysst.aggregate.success_rate == pytest.approx(sum(s.success_rate for s in sysst.workers))
    assert "PCG64" in sysst.to_dict()["generator"]


@pytest.mark.parametrize("kw", [dict(horizon=0), dict(warmup=0.9), dict(batches=1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_input_validation():
    w = WorkerParams(2.0, 1.0)
    with pytest.raises(ValueError):
        simulate_worker(w, -1.0)
    with pytest.raises(ValueError):
        simulate_worker(w, 1.0, mode="lax")
    with pytest.raises(ValueError):
        simulate_system([w], Policy([1.0, 1.0], [0.0, 0.0]))
