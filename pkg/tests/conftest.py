import numpy as np
import pytest

from mfpc.channel import BoundedUniform, Population, RayleighSquared, sample_population
from mfpc.game import ProtocolParams

BETAS = (0.1, 0.5, 1.0, 5.0)


def reference_params(beta=0.1):
    return ProtocolParams(alpha=0.25, n0=5.0, beta=beta, e_min=0.0, e_max=150.0)


def reference_population(seed=0, n=1000):
    return sample_population(RayleighSquared(5.0), n, seed)


@pytest.fixture
def params():
    return reference_params()


@pytest.fixture
def two_users():
    return Population(np.array([10.0, 50.0]))


@pytest.fixture
def uniform_pop():
    return sample_population(BoundedUniform(10.0, 50.0), 500, 3)


@pytest.fixture(scope="session")
def rayleigh_pop():
    return reference_population(0)


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    """Record one acceptance line, print it, and fail the test when ``ok`` is false."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
