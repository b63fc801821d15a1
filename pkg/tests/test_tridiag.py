import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecrsolve.errors import LengthMismatch, NotSymmetrizable, PivotBreakdown, ZeroPivot
from ecrsolve.matrices import build_m1, build_m2, laplacian, random_spd, random_symmetric
from ecrsolve.tridiag import (
    UNIT_ROUNDOFF,
    EigenRequest,
    SubmatrixWindow,
    TridiagonalMatrix,
    detgtri,
    detgtri_pivots,
    eigenvalues_bisect,
    mob_error_bound,
    solve_shifted,
    sturm_count,
    symmetrize_similarity,
    thomas_solve,
)


def test_length_validation():
    with pytest.raises(LengthMismatch):
        TridiagonalMatrix([1.0, 2.0], [1.0, 1.0], [1.0])


def test_window_is_one_based_inclusive():
    T = laplacian(5)
    w = T.window(2, 4)
    assert w.order == 3
    np.testing.assert_array_equal(w.diag, [2, 2, 2])
    assert SubmatrixWindow(2, 4).size == 3


def test_json_round_trip_is_bit_exact():
    T = build_m1(9)
    S = TridiagonalMatrix.from_dict(T.to_dict())
    assert S.diag.tobytes() == T.diag.tobytes()
    assert S.sub.tobytes() == T.sub.tobytes()


def test_m1_m2_entries():
    M1, M2 = build_m1(4), build_m2(4)
    assert M1.diag[0] == pytest.approx(0.4, rel=1e-15)
    assert M1.sub[0] == pytest.approx(-1 / (5 * math.sqrt(21)), rel=1e-15)
    assert M1.sub[0] == pytest.approx(-0.0436436, abs=1e-7)
    assert M2.diag[0] == pytest.approx(2 / 21, rel=1e-15)
    assert M1.is_symmetric and M2.is_symmetric


def test_thomas_matches_dense(rng):
    T = random_spd(12, rng)
    b = rng.uniform(-1, 1, 12)
    x = thomas_solve(T.diag, T.sub, T.sup, b)
    np.testing.assert_allclose(x, np.linalg.solve(T.dense(), b), rtol=1e-13)


def test_solve_shifted_negative_shift(rng):
    T = random_spd(7, rng)
    b = np.ones(7)
    x = solve_shifted(T, -0.5, b)
    np.testing.assert_allclose((T.dense() + 0.5 * np.eye(7)) @ x, b, atol=1e-13)


def test_zero_pivot():
    with pytest.raises(ZeroPivot):
        solve_shifted(TridiagonalMatrix.symmetric([1.0, 1.0], [1.0]), 0.0, [1.0, 1.0])


def test_detgtri_laplacian():
    # det tridiag(-1, 2, -1) of order q is q + 1
    for q in range(1, 9):
        assert detgtri(laplacian(q)) == pytest.approx(q + 1, rel=1e-13)
        assert detgtri(laplacian(q), exact=True) == q + 1


def test_detgtri_exact_shift():
    T = laplacian(3)
    # det(x I + T) at x = 1/2 for tridiag(-1,2,-1): (2.5)^3 - 2*2.5
    assert detgtri(T, exact=True, shift=Fraction(-1, 2)) == Fraction(5, 2) ** 3 - 2 * Fraction(5, 2)


def test_detgtri_breakdown_and_perturbation():
    T = TridiagonalMatrix.symmetric([0.0, 1.0], [1.0])
    with pytest.raises(PivotBreakdown):
        detgtri_pivots(T)
    g = detgtri_pivots(T, perturb=True)
    assert g[0] == UNIT_ROUNDOFF * T.norm_inf()


def test_sturm_count_laplacian():
    T = laplacian(3)
    eigs = [2 - math.sqrt(2), 2, 2 + math.sqrt(2)]
    assert sturm_count(T, 0.0) == 0
    assert sturm_count(T, 1.0) == 1
    assert sturm_count(T, 3.0) == 2
    assert sturm_count(T, 4.0) == 3
    np.testing.assert_allclose(eigenvalues_bisect(T), eigs, atol=1e-14)


def test_bisection_respects_index_range():
    T = laplacian(6)
    full = eigenvalues_bisect(T)
    part = eigenvalues_bisect(T, EigenRequest(first=2, last=4))
    np.testing.assert_array_equal(part, full[1:4])


def test_bisection_closed_form_laplacian():
    n = 31
    k = np.arange(1, n + 1)
    exact = 2 - 2 * np.cos(k * np.pi / (n + 1))
    got = eigenvalues_bisect(laplacian(n))
    assert np.max(np.abs(got - exact)) <= mob_error_bound(laplacian(n), UNIT_ROUNDOFF) + 1e-14


def test_symmetrize_similarity_preserves_spectrum():
    T = TridiagonalMatrix([1.0, 2.0, 3.0], [0.5, 2.0], [2.0, 0.125])
    d, S = symmetrize_similarity(T)
    assert S.is_symmetric
    D = np.diag(d)
    np.testing.assert_allclose(np.linalg.inv(D) @ T.dense() @ D, S.dense(), atol=1e-14)


def test_not_symmetrizable():
    with pytest.raises(NotSymmetrizable):
        symmetrize_similarity(TridiagonalMatrix([1.0, 1.0], [1.0], [-1.0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2 ** 32 - 1))
def test_bisection_sorted_and_close_to_lapack(order, seed):
    T = random_symmetric(order, np.random.default_rng(seed))
    got = eigenvalues_bisect(T)
    assert np.all(np.diff(got) >= 0)
    ref = np.linalg.eigvalsh(T.dense())
    assert np.max(np.abs(got - ref)) <= mob_error_bound(T, UNIT_ROUNDOFF) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2 ** 32 - 1))
def test_detgtri_matches_exact(order, seed):
    T = random_spd(order, np.random.default_rng(seed))
    assert detgtri(T) == pytest.approx(float(detgtri(T, exact=True)), rel=1e-12)


def test_mass_matrices_are_positive_definite():
    for build in (build_m1, build_m2):
        assert eigenvalues_bisect(build(31))[0] > 0
