import numpy as np
import pytest

from solwave.closed_form import sech
from solwave.fieldcore import State, make_grid
from solwave.model import ModelParams


@pytest.fixture(scope="session")
def grid():
    return make_grid()


@pytest.fixture(scope="session")
def quartic():
    return ModelParams.simple()


@pytest.fixture(scope="session")
def sech_pair(grid):
    s = sech(grid.x)
    return State(s, s.copy())


def random_band_limited(grid, rng, kmax=3.0, complex_=True):
    coef = rng.standard_normal(grid.n) + (1j * rng.standard_normal(grid.n) if complex_ else 0)
    coef[np.abs(grid.k) > kmax] = 0
    f = np.fft.ifft(coef) * grid.n / 10
    return f if complex_ else f.real


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE_LINES]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
