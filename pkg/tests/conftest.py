import numpy as np
import pytest

from fquant.functional import Curve


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hourly_grid():
    return np.arange(1, 25, dtype=float)


def random_curves(rng, n, m=24, scale=1.0):
    grid = np.arange(1, m + 1, dtype=float)
    return [Curve(grid, scale * rng.standard_normal(m).cumsum()) for _ in range(n)]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
