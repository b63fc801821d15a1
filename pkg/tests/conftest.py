import numpy as np
import pytest

from ecrsolve.matrices import build_m1, build_m2, fit_spectrum, random_spd
from ecrsolve.tridiag import TridiagonalMatrix

ACCEPTANCE_LINES = []


def conditioned_b(m, rng):
    """SPD ``B`` rescaled so its spectrum lies in ``(0, 0.999]``."""
    if m == 1:
        return TridiagonalMatrix.symmetric([0.999], [])
    return fit_spectrum(random_spd(m, rng))


def mass_matrix(kind, n):
    return {"m1": build_m1, "m2": build_m2}[kind](n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
