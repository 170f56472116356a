import numpy as np
import pytest
from hypothesis import settings

from qhlab.fields import GaussianPairParams, build_grid

settings.register_profile("qhlab", deadline=None, max_examples=40)
settings.load_profile("qhlab")

ACCEPTANCE = {}


@pytest.fixture
def pair_params():
    return GaussianPairParams(10.0, 1.0, 2.0)


@pytest.fixture
def pair_grid():
    # dx = 0.02, so ell = 1 falls on grid points
    return build_grid(-40.96, 40.96, 4096)


@pytest.fixture
def harmonic_grid():
    return build_grid(-20.48, 20.48, 2048)


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""

    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def gaussian_values(grid, center=0.0, std=1.0, p0=0.0):
    """Amplitude of a Gaussian whose density has standard deviation ``std``."""
    x = grid.x
    return np.exp(-(x - center) ** 2 / (4 * std * std) + 1j * p0 * x)
