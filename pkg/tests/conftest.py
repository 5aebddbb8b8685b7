import numpy as np
import pytest

from divflow.datasets import AnalyticSpec, NoiseSpec, add_noise, gen_analytic
from divflow.field import GridSpec, ScalarSlice, VectorSlice


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid():
    return GridSpec(16, 12, 0.5, 0.25)


def random_vector_slice(rng, grid):
    return VectorSlice.from_arrays(grid, *(rng.normal(size=grid.shape) for _ in range(3)))


@pytest.fixture(scope="session")
def analytic_volume():
    return gen_analytic(AnalyticSpec())


@pytest.fixture(scope="session")
def noisy_volume(analytic_volume):
    return add_noise(analytic_volume, NoiseSpec(0.10, 0))


def ramp(grid, fx=1.0, fy=0.0, c=0.0):
    ys, xs = np.mgrid[0:grid.ny, 0:grid.nx]
    return ScalarSlice(grid, c + fx * xs + fy * ys)


# Lines collected by the acceptance suite and echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
