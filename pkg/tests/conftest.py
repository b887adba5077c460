import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zklab.grid import Grid

settings.register_profile(
    "zklab", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("zklab")


@pytest.fixture
def small_grid():
    return Grid(Lx=16.0, Nx=32, Ny=16, Tw=2 * np.pi, Nt=16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
