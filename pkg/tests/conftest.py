import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hydroalpha.field import create_grid
from hydroalpha.zbasis import build_basis

settings.register_profile(
    "hydroalpha",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture],
)
settings.load_profile("hydroalpha")


@pytest.fixture(scope="session")
def grid():
    return create_grid(64, 48)


@pytest.fixture(scope="session")
def small_grid():
    return create_grid(16, 32)


@pytest.fixture(scope="session")
def basis(grid):
    return build_basis(grid, 16, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
