import math

import numpy as np
import pytest

from ecrsolve.classic_cr import (
    PoissonBlockSystem,
    apply_Ar,
    apply_Ar_inverse,
    cheb_zeros,
    chebyshev_P,
    cr_solve,
    dense_level_matrix,
    factored_level_matrix,
)
from ecrsolve.errors import LengthMismatch
from ecrsolve.matrices import poisson_block


def test_cheb_zeros_values():
    assert cheb_zeros(0).zeros == pytest.approx([0.0], abs=1e-15)
    np.testing.assert_allclose(cheb_zeros(1).zeros, [-math.sqrt(2), math.sqrt(2)], rtol=1e-15)
    z = cheb_zeros(2).zeros
    assert len(z) == 4
    np.testing.assert_allclose(z, -z[::-1], atol=1e-15)
    assert np.all(np.abs(cheb_zeros(5).zeros) < 2)


def test_chebyshev_polynomial_identity():
    x = np.linspace(-2, 2, 50)
    for r in range(5):
        # P_{2^r}(x) = -2 T_{2^r}(-x/2)
        T = np.cos(2 ** r * np.arccos(-x / 2))
        np.testing.assert_allclose(chebyshev_P(r, x), -2 * T, rtol=1e-12, atol=1e-12 * 2 ** (2 * r))


def test_level_zero_inverse_is_plain_solve(rng):
    b = rng.uniform(-1, 1, 6)
    np.testing.assert_allclose(apply_Ar_inverse(6, 0, b), np.linalg.solve(poisson_block(6).dense(), b), rtol=1e-14)


def test_level_one_inverse_m2():
    A = poisson_block(2).dense()
    b = np.array([1.0, -1.0])
    np.testing.assert_allclose(apply_Ar_inverse(2, 1, b), np.linalg.solve(2 * np.eye(2) - A @ A, b), rtol=1e-13)


def test_level_two_inverse_m8(rng):
    b = rng.uniform(-1, 1, 8)
    ref = np.linalg.solve(dense_level_matrix(8, 2), b)
    assert np.linalg.norm(apply_Ar_inverse(8, 2, b) - ref) <= 1e-10 * np.linalg.norm(ref)


def test_factored_matvec(rng):
    v = rng.uniform(-1, 1, 8)
    for r in range(4):
        ref = dense_level_matrix(8, r) @ v
        np.testing.assert_allclose(apply_Ar(8, r, v), ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


@pytest.mark.parametrize("r", [0, 1, 2, 3])
@pytest.mark.parametrize("m", [1, 2, 5, 8])
def test_recurrence_vs_factored(r, m):
    D, F = dense_level_matrix(m, r + 1), factored_level_matrix(m, r + 1)
    # entries grow like 6^(2^(r+1)); compare relative to the largest
    assert np.abs(D - F).max() <= 1e-9 * np.abs(D).max()


def test_single_block():
    g = np.array([[1.0, 2.0, 3.0]])
    u = cr_solve(PoissonBlockSystem(3, 0, g))
    np.testing.assert_allclose(u[0], np.linalg.solve(poisson_block(3).dense(), g[0]), rtol=1e-14)


def test_k1_m2_all_ones():
    sys = PoissonBlockSystem(2, 1, np.ones((3, 2)))
    ref = np.linalg.solve(sys.dense(), np.ones(6)).reshape(3, 2)
    np.testing.assert_allclose(cr_solve(sys), ref, rtol=1e-14)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("m", [2, 8, 16])
def test_matches_dense(k, m, rng):
    sys = PoissonBlockSystem(m, k, rng.uniform(-1, 1, (2 ** (k + 1) - 1, m)))
    ref = np.linalg.solve(sys.dense(), sys.g.ravel()).reshape(sys.g.shape)
    assert np.linalg.norm(cr_solve(sys) - ref) <= 1e-9 * np.linalg.norm(ref)


def test_shape_validation():
    with pytest.raises(LengthMismatch):
        PoissonBlockSystem(2, 1, np.ones((4, 2)))
    with pytest.raises(LengthMismatch):
        apply_Ar_inverse(3, 0, np.ones(4))
