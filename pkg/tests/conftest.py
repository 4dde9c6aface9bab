import numpy as np
import pytest

from bosonwalk.fock import enumerate_basis
from bosonwalk.network import CouplingGraph, random_graph

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_mode():
    """Two modes coupled at 30 MHz."""
    return CouplingGraph(np.array([[0.0, 30.0], [30.0, 0.0]]))


@pytest.fixture
def ten_mode():
    return random_graph(10, seed=1)


@pytest.fixture
def basis_10_3():
    return enumerate_basis(10, 3)
