import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from exhaustalloc import WorkerParams

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

rates = st.floats(0.2, 20.0, allow_nan=False, allow_infinity=False)
unit = st.floats(0.0, 1.0, allow_nan=False)
alphas = st.floats(0.0, 20.0, allow_nan=False)


@st.composite
def worker(draw, with_ps=False):
    mu = draw(rates)
    lam = mu * draw(st.floats(1.0, 10.0))
    ps = draw(unit) if with_ps else 0.0
    return WorkerParams(lam, mu, ps)


@st.composite
def population(draw, n_min=1, n_max=8, with_ps=False):
    n = draw(st.integers(n_min, n_max))
    return [draw(worker(with_ps)) for _ in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report one line each; collected here and echoed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
