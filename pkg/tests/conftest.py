import numpy as np
import pytest

from sphereppw.domain import solve_dirichlet
from sphereppw.mesh import make_domain

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cap_spectrum():
    return solve_dirichlet(make_domain("cap", 0.04, theta1=1.0))


@pytest.fixture(scope="session")
def perturbed_spectrum():
    return solve_dirichlet(make_domain("perturbed_cap", 0.04, theta1=1.0, amplitude=0.1,
                                       wavenumber=2))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
