"""Matrix builders for test problems."""

import numpy as np

from .tridiag import TridiagonalMatrix, eigenvalues_bisect


def build_m1(n: int) -> TridiagonalMatrix:
    """Legendre-Galerkin mass matrix (even modes) of order ``n``.

    ``b_i = 2 / ((4i-3)(4i+1))`` and
    ``a_{i+1} = -1 / (sqrt((4i+3)(4i-1)) (4i+1))``.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    i = np.arange(1, n + 1, dtype=float)
    diag = 2.0 / ((4 * i - 3) * (4 * i + 1))
    j = i[:-1]
    off = -1.0 / (np.sqrt((4 * j + 3) * (4 * j - 1)) * (4 * j + 1))
    return TridiagonalMatrix.symmetric(diag, off)


def build_m2(n: int) -> TridiagonalMatrix:
    """Legendre-Galerkin mass matrix (odd modes) of order ``n``.

    ``b_i = 2 / ((4i-1)(4i+3))`` and
    ``a_{i+1} = -1 / (sqrt((4i+5)(4i+1)) (4i+3))``.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    i = np.arange(1, n + 1, dtype=float)
    diag = 2.0 / ((4 * i - 1) * (4 * i + 3))
    j = i[:-1]
    off = -1.0 / (np.sqrt((4 * j + 5) * (4 * j + 1)) * (4 * j + 3))
    return TridiagonalMatrix.symmetric(diag, off)


def laplacian(n: int, scale: float = 1.0) -> TridiagonalMatrix:
    """``scale * tridiag(-1, 2, -1)``."""
    return TridiagonalMatrix.constant(n, -scale, 2.0 * scale, -scale)


def poisson_block(m: int) -> TridiagonalMatrix:
    """Diagonal block ``tridiag(1, -4, 1)`` of the five-point Poisson matrix."""
    return TridiagonalMatrix.constant(m, 1.0, -4.0, 1.0)


def fit_spectrum(T: TridiagonalMatrix, top: float = 0.999) -> TridiagonalMatrix:
    """Rescale a positive definite ``T`` so its largest eigenvalue is ``top``."""
    lmax = eigenvalues_bisect(T)[-1]
    return T.scaled(top / lmax)


def random_spd(order: int, rng: np.random.Generator, coupling=(0.2, 1.0), margin=(0.05, 0.5)) -> TridiagonalMatrix:
    """Random symmetric positive definite tridiagonal matrix.

    Off-diagonal magnitudes are drawn from ``coupling`` with random signs and
    the diagonal is the Gershgorin radius plus a positive margin, so the
    matrix is strictly diagonally dominant.
    """
    off = rng.uniform(*coupling, size=order - 1) * rng.choice([-1.0, 1.0], size=order - 1)
    radius = np.zeros(order)
    radius[1:] += np.abs(off)
    radius[:-1] += np.abs(off)
    diag = radius + rng.uniform(*margin, size=order)
    return TridiagonalMatrix.symmetric(diag, off)


def random_symmetric(order: int, rng: np.random.Generator) -> TridiagonalMatrix:
    """Random symmetric tridiagonal matrix with entries in ``[-1, 1]``."""
    return TridiagonalMatrix.symmetric(rng.uniform(-1, 1, order), rng.uniform(-1, 1, order - 1))

