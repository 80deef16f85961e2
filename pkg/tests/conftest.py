import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zwitterlab.grid import PhaseGrid
from zwitterlab.opalgebra import default_test_grid, random_test_states
from zwitterlab.potentials import QuarticPotential
from zwitterlab.spectra import harmonic_eigenstate
from zwitterlab.state import from_quantum_pure

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def grid64():
    return PhaseGrid(64, 64, 16.0, 16.0)


@pytest.fixture(scope="session")
def grid128():
    return PhaseGrid(128, 128, 16.0, 16.0)


@pytest.fixture(scope="session")
def ground64(grid64):
    return from_quantum_pure(harmonic_eigenstate(grid64, 0))


@pytest.fixture(scope="session")
def test_grid():
    return default_test_grid()


@pytest.fixture(scope="session")
def smooth_states(test_grid):
    return random_test_states(test_grid, 4, seed=7)


@pytest.fixture(scope="session")
def quartic():
    return QuarticPotential(c=1.0, d=0.3, e=0.5)


@pytest.fixture(scope="session")
def cubic():
    return QuarticPotential(c=1.0, d=0.3)


def l2(grid, f):
    return math.sqrt(float(np.sum(np.abs(f) ** 2) * grid.measure))
