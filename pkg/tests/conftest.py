import numpy as np
import pytest

from arraycav.model import square_config


@pytest.fixture
def reference_array():
    """20x20 array, w = 15, x-polarized, free space."""
    return square_config(1.2, 20, 15.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
