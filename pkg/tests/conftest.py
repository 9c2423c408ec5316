import math

import pytest

from sirkit.filter_design import band_plan, chebyshev_prototype, coupling_plan
from sirkit.network import FrequencyGrid


@pytest.fixture
def sband_plan():
    return band_plan(11, 3.1e9, 3.5e9, 0.0436, qu=7000.0)


@pytest.fixture
def sband_grid():
    return FrequencyGrid.from_step(2.8e9, 3.8e9, 1e6)


@pytest.fixture
def three_pole():
    return coupling_plan(chebyshev_prototype(3, 0.1), 3.3e9, 0.1, math.inf)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
