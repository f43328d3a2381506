import math
import warnings

import numpy as np
import pytest

from adx import ADParams, RadialFunction, make_grid, solve_green
from adx.radial import energy_parts

BETA0 = 32 * math.pi**2


@pytest.fixture(scope="session")
def grid4():
    return make_grid(4, 1e-3, 30.0, 1024, "log")


@pytest.fixture(scope="session")
def gauss_grid():
    return make_grid(4, 1e-2, 20.0, 2048, "log")


@pytest.fixture(scope="session")
def green07():
    return solve_green(0.7)


@pytest.fixture(scope="session")
def green099():
    return solve_green(0.99)


def sphere_point(grid, widths, coeffs):
    r = grid.nodes
    v = sum(c * np.exp(-0.5 * (r / w) ** 2) for c, w in zip(coeffs, widths))
    return RadialFunction(grid, v / math.sqrt(sum(energy_parts(grid, v))))


@pytest.fixture
def params():
    return ADParams.make(beta=10.0, alpha=0.3, gamma=0.1)


@pytest.fixture(autouse=True)
def _quiet_saturation():
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
