import numpy as np
import pytest

from conftest import conditioned_b, mass_matrix
from ecrsolve.chains import apply_rational_chain, apply_scaled_inverse_chain
from ecrsolve.ecr import SeparableSystem, _Context, back_substitute, reduce, solve
from ecrsolve.errors import ConditionViolation, LengthMismatch
from ecrsolve.matrices import build_m1, build_m2, laplacian, random_spd
from ecrsolve.tridiag import TridiagonalMatrix, thomas_solve
from ecrsolve.verify import dense_block_polynomials, dense_kron_solve, polynomial_reference
from ecrsolve.zeros import CouplingCoefficients, PairedChain, build_zero_table, level_indices

EYE2 = TridiagonalMatrix.symmetric([1.0, 1.0], [0.0])


def rel_err(x, ref):
    return np.linalg.norm(x - ref) / np.linalg.norm(ref)


# -- chains -----------------------------------------------------------------

def test_rational_chain_single_solve():
    z = apply_rational_chain(EYE2, PairedChain((), -1.0), [2.0, 4.0])
    assert z.tolist() == [1.0, 2.0]


def test_rational_chain_equal_pair_is_bitwise_noop(rng):
    B = random_spd(5, rng)
    b = rng.uniform(-1, 1, 5)
    with_pair = apply_rational_chain(B, PairedChain(((-2.0, -2.0),), -1.0), b)
    without = apply_rational_chain(B, PairedChain((), -1.0), b)
    assert with_pair.tobytes() == without.tobytes()
    assert apply_rational_chain(B, PairedChain(((-2.0, -2.0),), -1.0), b, final=False).tobytes() == b.tobytes()


def test_rational_chain_matches_dense_polynomials():
    B = laplacian(2, 0.25)
    Rn = build_m1(3)
    table = build_zero_table(Rn, 2)
    P = dense_block_polynomials(B, Rn, 2)
    b = np.array([1.0, 1.0])
    # (B_2^(1))^-1 B_1^(0) B_3^(0) b, with the level sign applied by the solver
    got = -apply_rational_chain(B, table.chain(1, 2), b)
    ref = np.linalg.solve(P[(1, 2)], P[(0, 1)] @ P[(0, 3)] @ b)
    assert rel_err(got, ref) < 1e-12


@pytest.mark.parametrize("kind", ["m1", "m2"])
@pytest.mark.parametrize("m", [1, 3, 8])
def test_rational_chain_dense_property(kind, m, rng):
    B = conditioned_b(m, rng)
    Rn = mass_matrix(kind, 7)
    table = build_zero_table(Rn, 3, all_windows=True)
    for r in (1, 2):
        for i in level_indices(r, 7):
            b = rng.uniform(-1, 1, m)
            got = (-1) ** r * apply_rational_chain(B, table.chain(r, i), b)
            assert rel_err(got, polynomial_reference(B, Rn, 3, r, i, b)) < 1e-9


def test_scaled_chain_examples():
    assert apply_scaled_inverse_chain(EYE2, [-1.0], [3.0], [2.0, 2.0]).tolist() == [3.0, 3.0]
    assert apply_scaled_inverse_chain(EYE2, [-1.0, -2.0], [0.0, 5.0], [2.0, 2.0]).tolist() == [0.0, 0.0]
    with pytest.raises(LengthMismatch):
        apply_scaled_inverse_chain(EYE2, [-1.0], [1.0, 2.0], [1.0, 1.0])


def test_scaled_chain_matches_dense_alpha_term(rng):
    # alpha_4^(1) (B_3^(0))^-1 b on M1 of order 7; the chain carries a_3, a_4 multiplies after
    Rn, B = build_m1(7), conditioned_b(4, rng)
    table = build_zero_table(Rn, 3)
    cc = CouplingCoefficients.from_matrix(Rn)
    b = rng.uniform(-1, 1, 4)
    got = cc.a[4] * apply_scaled_inverse_chain(B, table[(0, 3)], cc.a[3:4], b)
    ref = cc.alpha(1, 4) * np.linalg.solve(B.dense() + Rn.diag[2] * np.eye(4), b)
    assert rel_err(got, ref) < 1e-10


# -- reduction and back-substitution -------------------------------------------

def test_single_block_system():
    B = laplacian(3, 0.25)
    Rn = TridiagonalMatrix.symmetric([0.3], [])
    y = np.array([[1.0, -2.0, 0.5]])
    sys = SeparableSystem(B, Rn, y)
    table = build_zero_table(Rn, 1)
    red = reduce(sys, table)
    assert red.final.tolist() == y[0].tolist()
    x = back_substitute(sys, table, red).x
    np.testing.assert_allclose(x[0], np.linalg.solve(B.dense() + 0.3 * np.eye(3), y[0]), rtol=1e-14)


def test_k2_scalar_reduction_by_hand():
    beta = 0.4
    Rn = TridiagonalMatrix([0.5, 0.6, 0.7], [-0.1, -0.2], [-0.15, -0.25])
    B = TridiagonalMatrix.symmetric([beta], [])
    y = np.array([[1.0], [2.0], [3.0]])
    sys = SeparableSystem(B, Rn, y)
    red = reduce(sys, build_zero_table(Rn, 2))
    d1, d3 = beta + 0.5, beta + 0.7
    a2, c2 = -0.1, -0.25
    # eliminating x1, x3 from row 2 leaves rhs y2 - a2 y1/d1 - c2 y3/d3; p is its negative
    expected = a2 * 1.0 / d1 + c2 * 3.0 / d3 - 2.0
    assert red.final[0] == pytest.approx(expected, rel=1e-14)


def test_k3_reduced_value_matches_dense_schur(rng):
    B, Rn = laplacian(4, 0.25), build_m2(7)
    y = rng.uniform(-1, 1, (7, 4))
    sys = SeparableSystem(B, Rn, y)
    table = build_zero_table(Rn, 3)
    p_final = reduce(sys, table).final
    # dense oracle: with the full solution, the top level equation reads
    # D^-1 B_4^(2) x_4 = p_4^(2)
    x = dense_kron_solve(sys).x
    lhs = polynomial_reference(B, Rn, 3, 2, 4, x[3], inverse=False)
    assert rel_err(p_final, lhs) < 1e-10


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_scalar_blocks_match_thomas(k, rng):
    n = 2 ** k - 1
    Rn = build_m1(n)
    beta = 0.37
    y = rng.uniform(-1, 1, n)
    sys = SeparableSystem(TridiagonalMatrix.symmetric([beta], []), Rn, y[:, None])
    x, _ = solve(sys)
    ref = thomas_solve(Rn.diag + beta, Rn.sub, Rn.sup, y)
    assert rel_err(x.x[:, 0], ref) < 1e-12


def test_level_invariant(rng):
    B, Rn = conditioned_b(6, rng), build_m1(15)
    sys = SeparableSystem(B, Rn, rng.uniform(-1, 1, (15, 6)))
    table = build_zero_table(Rn, 4)
    red = reduce(sys, table)
    x = {i + 1: v for i, v in enumerate(dense_kron_solve(sys).x)}
    ctx = _Context(sys, table, CouplingCoefficients.from_matrix(Rn), 1)
    for r in range(4):
        s = 2 ** r
        for i in level_indices(r, 15):
            lhs = polynomial_reference(B, Rn, 4, r, i, x[i], inverse=False)
            if i - s >= 1:
                lhs = lhs + ctx.neighbor(r, i, -1, x[i - s])
            if i + s <= 15:
                lhs = lhs + ctx.neighbor(r, i, +1, x[i + s])
            p = red.states[r].p[i]
            assert np.linalg.norm(lhs - p) <= 1e-9 * max(np.linalg.norm(p), 1.0)


# -- solve -------------------------------------------------------------------

def test_solve_trivial():
    B = TridiagonalMatrix.symmetric([0.5] * 4, [0.0] * 3)
    Rn = TridiagonalMatrix.symmetric([0.5], [])
    x, report = solve(SeparableSystem(B, Rn, np.ones((1, 4))))
    np.testing.assert_allclose(x.x, np.ones((1, 4)), rtol=0, atol=1e-15)
    assert report.residual_rel < 1e-15


def test_poisson_style_residual(rng):
    sys = SeparableSystem(laplacian(8, 0.25), laplacian(7, 0.25), rng.uniform(-1, 1, (7, 8)))
    _, report = solve(sys)
    assert report.residual_rel <= 1e-10


def test_m1_k4_m15_matches_dense(rng):
    sys = SeparableSystem(conditioned_b(15, rng), build_m1(15), rng.uniform(-1, 1, (15, 15)))
    x, _ = solve(sys)
    assert rel_err(x.x, dense_kron_solve(sys).x) <= 1e-8


def test_k3_m8_random_spd_conditioned(rng):
    for _ in range(5):
        Rn = random_spd(7, rng)
        Rn = Rn.scaled(0.99 / max(abs(Rn.diag) + 2 * np.max(np.abs(Rn.sub))))
        sys = SeparableSystem(conditioned_b(8, rng), Rn, rng.uniform(-1, 1, (7, 8)))
        x, _ = solve(sys)
        assert rel_err(x.x, dense_kron_solve(sys).x) <= 1e-8


def test_scaling_equivariance_bitwise(rng):
    sys = SeparableSystem(conditioned_b(8, rng), build_m2(15), rng.uniform(-1, 1, (15, 8)))
    x1, _ = solve(sys)
    x2, _ = solve(sys.with_rhs(4.0 * sys.rhs))
    assert (4.0 * x1.x).tobytes() == x2.x.tobytes()


def test_threads_give_identical_results(rng):
    sys = SeparableSystem(conditioned_b(8, rng), build_m1(31), rng.uniform(-1, 1, (31, 8)))
    a, _ = solve(sys, threads=1)
    b, _ = solve(sys, threads=4)
    assert a.x.tobytes() == b.x.tobytes()


def test_env_thread_fallback(monkeypatch, rng):
    monkeypatch.setenv("ECR_THREADS", "3")
    sys = SeparableSystem(conditioned_b(4, rng), build_m1(7), rng.uniform(-1, 1, (7, 4)))
    x, _ = solve(sys)
    assert x.x.shape == (7, 4)


def test_certify_rejects_violating_b(rng):
    sys = SeparableSystem(laplacian(4), build_m1(7), rng.uniform(-1, 1, (7, 4)))
    with pytest.raises(ConditionViolation) as info:
        solve(sys, certify=True)
    assert info.value.diagnostics["checks"]["B_lambda_max"] is False


def test_certify_reports_bounds(rng):
    sys = SeparableSystem(conditioned_b(8, rng), build_m1(15), rng.uniform(-1, 1, (15, 8)))
    _, report = solve(sys, certify=True)
    assert report.conditions_ok and report.certified
    assert all(v is not None and np.isfinite(v) for v in report.bounds().values())


def test_system_validation():
    with pytest.raises(ValueError):
        SeparableSystem(laplacian(2), laplacian(4), np.zeros((4, 2)))
    with pytest.raises(LengthMismatch):
        SeparableSystem(laplacian(2), laplacian(3), np.zeros((3, 3)))
