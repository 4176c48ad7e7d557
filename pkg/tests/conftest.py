import math

import numpy as np
import pytest

from kpc.model import SolitonMode, SolutionSpec, SpectralMode, breather, dipole, soliton


@pytest.fixture
def fig1():
    return breather(0.5, -0.1, 0.0)


@pytest.fixture
def fig7():
    return breather(0.65, -0.1, 0.105 * math.pi)


@pytest.fixture
def fig14():
    return dipole(1.0, 0.05, 0.6)


@pytest.fixture
def fig19():
    return SolutionSpec("hyperbolic", (SpectralMode(0.5, 0.2, 0.6), SpectralMode(1.0, 0.5, -0.7)))


@pytest.fixture
def sol():
    return soliton(0.5, 0.5, 1.0)


def random_points(rng, n, half=8.0, tmax=1.0):
    return (rng.uniform(-half, half, n), rng.uniform(-half, half, n), rng.uniform(-tmax, tmax, n))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
