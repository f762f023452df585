import numpy as np
import pytest
from hypothesis import settings, strategies as st

from sirsi_lv.model import DimensionalParams, DimensionlessParams, nondimensionalize

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def log_uniform(lo=1e-3, hi=1e2):
    return st.floats(np.log(lo), np.log(hi)).map(np.exp)


@st.composite
def dimensionless_params(draw):
    return DimensionlessParams(*(draw(log_uniform()) for _ in range(5)))


def random_dimensionless(rng, n):
    """``n`` parameter sets drawn log-uniformly over [1e-3, 1e2] per field."""
    draws = np.exp(rng.uniform(np.log(1e-3), np.log(1e2), size=(n, 5)))
    return [DimensionlessParams(*row) for row in draws]


@pytest.fixture(scope="session")
def table1():
    return DimensionalParams.table1()


@pytest.fixture(scope="session")
def table1_dimless(table1):
    return nondimensionalize(table1)[0]


@pytest.fixture(scope="session")
def x0():
    return np.array([9.0, 1.0, 9.0, 1.0, 0.1])


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
