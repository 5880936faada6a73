import numpy as np
import pytest

from nmrmod.algebra import SpinSystem
from nmrmod.config import bundled_config


@pytest.fixture(scope="session")
def isr():
    return bundled_config().system


@pytest.fixture(scope="session")
def isrq():
    # four spins with distinct offsets and all couplings on
    J = [[0, -10.1, 11.3, 6.2],
         [-10.1, 0, 4.3, -3.7],
         [11.3, 4.3, 0, 8.9],
         [6.2, -3.7, 8.9, 0]]
    return SpinSystem(["I", "S", "R", "Q"], [12.5, -207.0, 201.0, 415.0], J)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for i in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[i])
