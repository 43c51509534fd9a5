import numpy as np
import pytest

from lyfq import polycore


@pytest.fixture
def running():
    return polycore.running_example()


@pytest.fixture
def antidiag():
    """1 - z1 z2"""
    return polycore.binomial((1, 1))


ELL_RUNNING = np.array([5 * np.pi / 22, 1.0])
ELL_ANTIDIAG = np.array([1.0, np.sqrt(2.0)])


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LOG: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LOG, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
