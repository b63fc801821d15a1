"""Dense oracles, identity checks and forward-error bound calculators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence

import numpy as np

from .chains import apply_rational_chain, apply_scaled_inverse_chain
from .errors import BoundOverflow, ConditionViolation, HypothesisFailed, NoConvergence, Singular
from .tridiag import UNIT_ROUNDOFF, TridiagonalMatrix, detgtri, eigenvalues_bisect, gershgorin_bounds
from .zeros import CouplingCoefficients, ZeroTable, level_indices, merge_product_zeros, window_for

TINY = 1e-300
DENSE_CAP = 4096


def g_of_u(u: float) -> float:
    """``g(u) = (4u + 3u^2 + u^3) / (1 - u)``."""
    return (4 * u + 3 * u * u + u ** 3) / (1 - u)


@dataclass(frozen=True)
class ErrorModel:
    """Rounding model: unit roundoff ``u``, zero tolerance ``eps = 7.5 u``,
    input perturbation ``delta`` and the exponent ``e`` in the
    ``lambda_min >= u**(1 - e)`` hypothesis."""

    u: float = UNIT_ROUNDOFF
    delta: float = 0.0
    condition_exponent: float = 0.5

    def __post_init__(self):
        if not self.u >= 0:
            raise ValueError("unit roundoff must be nonnegative")

    @property
    def eps(self) -> float:
        return 7.5 * self.u

    @property
    def g(self) -> float:
        return g_of_u(self.u)

    @property
    def lambda_floor(self) -> float:
        return self.u ** (1 - self.condition_exponent)


@dataclass
class ErrorReport:
    residual_rel: Optional[float] = None
    bound_C1: Optional[float] = None
    bound_C2: Optional[float] = None
    bound_C3: Optional[float] = None
    bound_Q_max: Optional[float] = None
    bound_xi: Optional[float] = None
    conditions_ok: Optional[bool] = None
    certified: bool = False
    chain_errors: Dict[str, float] = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def bounds(self) -> dict:
        return {"C1": self.bound_C1, "C2": self.bound_C2, "C3": self.bound_C3,
                "Q_max": self.bound_Q_max, "xi": self.bound_xi}


# ---------------------------------------------------------------------------
# Dense oracles
# ---------------------------------------------------------------------------

def dense_operator(sys) -> np.ndarray:
    """Dense ``Rn (x) I_m + I_n (x) B`` acting on the row-major ``(n, m)`` unknowns."""
    n, m = sys.Rn.order, sys.B.order
    return np.kron(sys.Rn.dense(), np.eye(m)) + np.kron(np.eye(n), sys.B.dense())


def dense_kron_solve(sys, cap: int = DENSE_CAP):
    """Solve the separable system by dense LU with partial pivoting (LAPACK)."""
    from .ecr import Solution

    n, m = sys.Rn.order, sys.B.order
    if n * m > cap:
        raise ValueError(f"dense oracle limited to m*n <= {cap}, got {n * m}")
    try:
        x = np.linalg.solve(dense_operator(sys), sys.rhs.ravel())
    except np.linalg.LinAlgError as exc:
        raise Singular(str(exc)) from None
    if not np.all(np.isfinite(x)):
        raise Singular("dense solve produced non-finite values")
    return Solution(x.reshape(n, m))


def dense_eigen(T: TridiagonalMatrix, tol: float = 1e-13, max_sweeps: int = 100) -> np.ndarray:
    """Ascending eigenvalues of a symmetric tridiagonal by cyclic Jacobi."""
    if T.order > 256:
        raise ValueError("dense_eigen is limited to order 256")
    A = T.dense().copy()
    q = A.shape[0]
    scale = np.linalg.norm(A)
    if q == 1 or scale == 0:
        return np.sort(np.diag(A))
    offmask = ~np.eye(q, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(np.sum(A[offmask] ** 2))
        if off <= tol * scale:
            return np.sort(np.diag(A))
        skip = 0.1 * tol * scale / q  # rotations this small cannot affect the stopping test
        for p in range(q - 1):
            for r in range(p + 1, q):
                apr = A[p, r]
                if abs(apr) <= skip:
                    continue
                diff = A[r, r] - A[p, p]
                if abs(apr) < 1e-150 * abs(diff):
                    t = apr / diff
                else:
                    tau = diff / (2.0 * apr)
                    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rp, rr = A[p, :].copy(), A[r, :].copy()
                A[p, :] = c * rp - s * rr
                A[r, :] = s * rp + c * rr
                cp, cr = A[:, p].copy(), A[:, r].copy()
                A[:, p] = c * cp - s * cr
                A[:, r] = s * cp + c * cr
                A[p, r] = A[r, p] = 0.0
    raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")


# ---------------------------------------------------------------------------
# Identity checks
# ---------------------------------------------------------------------------

def _rel(lhs, rhs) -> float:
    return float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), TINY))


def char_det(Rn: TridiagonalMatrix, lo: int, hi: int, x, exact: bool = False):
    """``det(xI + Rn[lo..hi])`` (1-based, inclusive); 1 for an empty range."""
    if hi < lo:
        return Fraction(1) if exact else 1.0
    return detgtri(Rn.window(lo, hi), exact=exact, shift=-Fraction(x) if exact else -x)


def level_char(Rn: TridiagonalMatrix, r: int, i: int, x, exact: bool = False):
    """``f_i^(r)(x) = det(xI + Rn[window])`` for the level-``r`` window at ``i``."""
    w = window_for(r, i, Rn.order)
    return char_det(Rn, w.lo, w.hi, x, exact)


def main_recurrence(Rn: TridiagonalMatrix, k: int, x: float) -> Dict[tuple, float]:
    """Scalar values ``beta_i^(r)(x)`` of the block polynomials from the
    three-term level recurrence, for every multiple ``i`` of ``2**r``.

    ``beta^(-1) = 1`` and ``beta_i^(0) = x + b_i``.
    """
    n = Rn.order
    cc = CouplingCoefficients.from_matrix(Rn)
    beta: Dict[tuple, float] = {}

    def B(r, i):
        return 1.0 if r < 0 else beta[(r, i)]

    for r in range(k):
        for i in level_indices(r, n):
            if r == 0:
                beta[(0, i)] = x + float(Rn.diag[i - 1])
                continue
            h = 2 ** (r - 1)
            q = 2 ** (r - 2) if r >= 2 else 0
            num = (cc.alpha(r - 1, i) * cc.gamma(r - 1, i - h) * B(r - 2, i + q) * B(r - 2, i - 3 * q) * B(r - 1, i + h)
                   - B(r - 1, i - h) * B(r - 1, i) * B(r - 1, i + h)
                   + cc.alpha(r - 1, i + h) * cc.gamma(r - 1, i) * B(r - 2, i - q) * B(r - 2, i + 3 * q) * B(r - 1, i - h))
            beta[(r, i)] = num / (B(r - 2, i - q) * B(r - 2, i + q))
    return beta


def dense_block_polynomials(B: TridiagonalMatrix, Rn: TridiagonalMatrix, k: int, dps: Optional[int] = None) -> dict:
    """Dense matrices ``B_i^(r)`` from the matrix form of the level recurrence.

    Independent of the zero tables; the division by
    ``B_{i-q}^(r-2) B_{i+q}^(r-2)`` is a dense solve (all factors commute).
    Forming these polynomials is ill-conditioned, so for ``r >= 2`` pass
    ``dps`` to evaluate with ``mpmath`` at that many digits; the result then
    holds ``mpmath`` matrices and must be used inside the same precision
    context (see :func:`polynomial_reference`).
    """
    n = Rn.order
    cc = CouplingCoefficients.from_matrix(Rn)
    if dps is None:
        Bd, eye = B.dense(), np.eye(B.order)

        def solve(A, X):
            return np.linalg.solve(A, X)
    else:
        import mpmath as mp

        Bd, eye = mp.matrix(B.dense().tolist()), mp.eye(B.order)

        def solve(A, X):
            return mp.inverse(A) * X

    mats: dict = {}

    def P(r, i):
        return eye if r < 0 else mats[(r, i)]

    for r in range(k):
        for i in level_indices(r, n):
            if r == 0:
                mats[(0, i)] = Bd + float(Rn.diag[i - 1]) * eye
                continue
            h = 2 ** (r - 1)
            q = 2 ** (r - 2) if r >= 2 else 0
            left = cc.alpha(r - 1, i) * cc.gamma(r - 1, i - h)
            right = cc.alpha(r - 1, i + h) * cc.gamma(r - 1, i)
            num = (left * (P(r - 2, i + q) @ P(r - 2, i - 3 * q) @ P(r - 1, i + h))
                   - P(r - 1, i - h) @ P(r - 1, i) @ P(r - 1, i + h)
                   + right * (P(r - 2, i - q) @ P(r - 2, i + 3 * q) @ P(r - 1, i - h)))
            mats[(r, i)] = solve(P(r - 2, i - q) @ P(r - 2, i + q), num)
    return mats


def polynomial_reference(B: TridiagonalMatrix, Rn: TridiagonalMatrix, k: int, r: int, i: int, b,
                         inverse: bool = True, dps: int = 50) -> np.ndarray:
    """High-precision ``(B_i^(r))^-1 D b`` (or ``D^-1 B_i^(r) b`` with
    ``inverse=False``) with ``D = B_{i-h}^(r-1) B_{i+h}^(r-1)``."""
    import mpmath as mp

    with mp.workdps(dps):
        P = dense_block_polynomials(B, Rn, k, dps=dps)
        v = mp.matrix([float(t) for t in b])
        if r == 0:
            D = mp.eye(B.order)
        else:
            h = 2 ** (r - 1)
            D = P[(r - 1, i - h)] * P[(r - 1, i + h)]
        out = mp.lu_solve(P[(r, i)], D * v) if inverse else mp.lu_solve(D, P[(r, i)] * v)
        return np.array([float(t) for t in out])


def check_main_identity(Rn: TridiagonalMatrix, k: int, x_samples: Sequence[float]) -> float:
    """Worst relative gap between the level recurrence and
    ``(-1)^r det(xI + Rn[window])`` over all ``(r, i)`` and samples."""
    worst = 0.0
    for x in x_samples:
        beta = main_recurrence(Rn, k, float(x))
        for (r, i), value in beta.items():
            det = (-1) ** r * level_char(Rn, r, i, float(x))
            worst = max(worst, _rel(value, det))
    return worst


def det_lemma_sides(Rn: TridiagonalMatrix, exact: bool = False):
    """Both sides of ``det(F_{q-1}) det(L_q) - det(F_q) det(L_{q-1}) = prod a_{i+1} c_i``.

    ``F_j`` is the leading ``j x j`` block and ``L_j`` rows/columns ``2..j``.
    """
    q = Rn.order
    if q < 2:
        raise ValueError("determinant lemma needs order >= 2")
    one = Fraction(1) if exact else 1.0

    def det(lo, hi):
        return one if hi < lo else detgtri(Rn.window(lo, hi), exact=exact)

    lhs = det(1, q - 1) * det(2, q) - det(1, q) * det(2, q - 1)
    rhs = one
    for a, c in zip(Rn.sub.tolist(), Rn.sup.tolist()):
        rhs *= (Fraction(a) * Fraction(c)) if exact else a * c
    return lhs, rhs


def check_det_lemma(Rn: TridiagonalMatrix, exact: bool = False) -> float:
    """Relative discrepancy ``|lhs - rhs| / max(|lhs|, |rhs|, tiny)``."""
    return _rel(*det_lemma_sides(Rn, exact))


def appendix_sides(Rn: TridiagonalMatrix, t: int, i: int, x, exact: bool = False):
    """Left and right determinant identities at ``(t, i)``, ``i`` a multiple of ``2**t``.

    Returns ``((lhs1, rhs1), (lhs2, rhs2))``. Hatted windows drop their last
    row, tilded windows their first.
    """
    H, Q = 2 ** (t - 1), 2 ** (t - 2)
    a = (0.0, 0.0) + tuple(Rn.sub.tolist())
    c = (0.0,) + tuple(Rn.sup.tolist()) + (0.0,)
    num = Fraction if exact else float
    if exact:
        x = Fraction(x)

    def f(r, j):
        return level_char(Rn, r, j, x, exact)

    def D(lo, hi):
        return char_det(Rn, lo, hi, x, exact)

    def coupling(js):
        out = num(1)
        for j in js:
            out *= num(a[j + 1]) * num(c[j])
        return out

    lhs1 = f(t - 1, i - H) * D(i - H + 1, i - 2) - f(t - 2, i - Q) * D(i - 2 * H + 1, i - 2)
    rhs1 = -f(t - 2, i - 3 * Q) * coupling(range(i - H, i - 1))
    lhs2 = f(t - 1, i + H) * D(i + 2, i + H - 1) - f(t - 2, i + Q) * D(i + 2, i + 2 * H - 1)
    rhs2 = -f(t - 2, i + 3 * Q) * coupling(range(i + 1, i + H))
    return (lhs1, rhs1), (lhs2, rhs2)


def check_appendix_identities(Rn: TridiagonalMatrix, k: int, x_samples: Sequence[float], exact: bool = False,
                              per_side: bool = False):
    """Worst relative discrepancy of the two appendix identities.

    With ``exact=True`` every determinant is evaluated in rational
    arithmetic; the identities are polynomial, so the result is then 0 up to
    a bug. With ``per_side`` the left and right worst cases are returned
    separately.
    """
    if k < 3:
        raise ValueError("appendix identities need k >= 3")
    n = Rn.order
    worst = [0.0, 0.0]
    for x in x_samples:
        for t in range(2, k):
            for i in level_indices(t, n):
                for side, (lhs, rhs) in enumerate(appendix_sides(Rn, t, i, x, exact)):
                    worst[side] = max(worst[side], _rel(lhs, rhs))
    return tuple(worst) if per_side else max(worst)


# ---------------------------------------------------------------------------
# Bound calculators
# ---------------------------------------------------------------------------

def bound_xi(kappa2: float, em: ErrorModel = ErrorModel()) -> float:
    """``xi = g(u) kappa / (1 - g(u) kappa)``."""
    gk = em.g * kappa2
    if 1 - gk <= 0:
        raise BoundOverflow(f"g(u) * kappa = {gk!r} >= 1")
    return gk / (1 - gk)


def bound_Q(lmax: float, lmin: float, alpha: float, em: ErrorModel = ErrorModel()) -> float:
    """Perturbation constant ``Q(B, alpha, u)`` for the shifted solve with ``B - alpha I``."""
    g, eps, s = em.g, em.eps, abs(alpha)
    low = lmin + s - eps
    if low <= 0:
        raise BoundOverflow("lambda_min + |alpha| - eps is not positive")
    denom = low - g * (lmax + s + eps)
    if denom <= 0:
        raise BoundOverflow("Q denominator is not positive")
    return g * (lmax + s + eps) * (lmin + s) / low / denom + eps / low


def bound_chain_C1(mu: Sequence[float]) -> float:
    """``C1 = sum_{l>=1} 1 / |mu_{l+1}|``."""
    mu = np.abs(np.asarray(mu, dtype=float))
    if mu.size == 0:
        raise ValueError("need at least one zero")
    return float(np.sum(1.0 / mu[1:]))


def bound_chain_C2_C3(xi: Sequence[float], a_factors: Sequence[float]):
    """``C2 = prod |a_j| / |xi_j|`` and ``C3 = sum 1 / |xi_j|``."""
    xi = np.abs(np.asarray(xi, dtype=float))
    a = np.abs(np.asarray(a_factors, dtype=float))
    if xi.size != a.size:
        raise ValueError("need one scalar factor per zero")
    return float(np.prod(a / xi)), float(np.sum(1.0 / xi))


def paired_chain_bound(mu: Sequence[float], b_norm: float, em: ErrorModel = ErrorModel()) -> float:
    """``|mu_L| / |mu_1| (delta + 77 u C1 ||b||)`` for the pairs of a chain."""
    mu = np.asarray(mu, dtype=float)
    return float(abs(mu[-1]) / abs(mu[0]) * (em.delta + 77 * em.u * bound_chain_C1(mu) * b_norm))


def scaled_chain_bound(xi: Sequence[float], a_factors: Sequence[float], b_norm: float,
                       em: ErrorModel = ErrorModel()) -> float:
    """``C2 (delta + 41 u C3 ||b||)``."""
    c2, c3 = bound_chain_C2_C3(xi, a_factors)
    return c2 * (em.delta + 41 * em.u * c3 * b_norm)


def sum_bound_B(lmax: float, lmin: float, mu: float, em: ErrorModel = ErrorModel()) -> float:
    """Reference value ``(1 + Q) xi`` combining the two single-solve constants."""
    kappa = (lmax + abs(mu)) / (lmin + abs(mu))
    return (1 + bound_Q(lmax, lmin, mu, em)) * bound_xi(kappa, em)


# ---------------------------------------------------------------------------
# Hypotheses
# ---------------------------------------------------------------------------

@dataclass
class ConditionCheck:
    ok: bool
    diagnostics: dict

    def __bool__(self):
        return self.ok

    def raise_if_failed(self):
        if not self.ok:
            failed = [name for name, passed in self.diagnostics["checks"].items() if not passed]
            raise ConditionViolation("conditions violated: " + ", ".join(failed), self.diagnostics)


def _extremes(T: TridiagonalMatrix):
    eigs = eigenvalues_bisect(T)
    return float(eigs[0]), float(eigs[-1])


def check_conditions(sys, em: ErrorModel = ErrorModel()) -> ConditionCheck:
    """Check the certification hypotheses on ``B`` and ``Rn``.

    Both symmetric positive definite, ``Rn`` with nonzero off-diagonals,
    ``lambda_max(B) <= 1``, ``max |b_i +- (|a_i| + |a_{i+1}|)| <= 1`` for
    ``Rn`` and both smallest eigenvalues at least ``u**(1 - e)``.
    """
    B, Rn = sys.B, sys.Rn
    floor = em.lambda_floor
    checks = {"B_symmetric": B.is_symmetric, "Rn_symmetric": Rn.is_symmetric,
              "Rn_offdiag_nonzero": bool(np.all(Rn.sub != 0) and np.all(Rn.sup != 0))}
    diag = {"lambda_floor": floor}
    if checks["B_symmetric"] and checks["Rn_symmetric"]:
        bmin, bmax = _extremes(B)
        rmin, rmax = _extremes(Rn)
        radius = np.zeros(Rn.order)
        radius[1:] += np.abs(Rn.sub)
        radius[:-1] += np.abs(Rn.sup)
        gersh = float(np.max(np.maximum(np.abs(Rn.diag + radius), np.abs(Rn.diag - radius))))
        diag.update(B_lambda_min=bmin, B_lambda_max=bmax, Rn_lambda_min=rmin, Rn_lambda_max=rmax,
                    Rn_gershgorin=gersh)
        checks.update(B_positive=bmin > 0, Rn_positive=rmin > 0, B_lambda_max=bmax <= 1.0,
                      Rn_gershgorin=gersh <= 1.0, B_lambda_min=bmin >= floor, Rn_lambda_min=rmin >= floor)
    diag["checks"] = checks
    return ConditionCheck(all(checks.values()), diag)


def m2_det_hypothesis(T: TridiagonalMatrix, t: int, l: int) -> bool:
    """``b_{j+1}/|a_{j+1}| - |a_{j+1}|/|a_j| > 1`` for ``j = t..l-1`` with ``a_t := b_t``."""
    b = (0.0,) + tuple(T.diag.tolist())
    a = (0.0, 0.0) + tuple(T.sub.tolist())

    def a_(j):
        return b[t] if j == t else a[j]

    return all(b[j + 1] / abs(a_(j + 1)) - abs(a_(j + 1)) / abs(a_(j)) > 1 for j in range(t, l))


def check_m2_det_bound(T: TridiagonalMatrix, t: int, l: int, relax: float = 1.0,
                       require_hypothesis: bool = True) -> bool:
    """Whether ``det(T[t..l]) > b_t prod_{i=t+1}^{l} |a_i| / relax``.

    Raises :class:`HypothesisFailed` when ``require_hypothesis`` is set and
    the ratio condition fails.
    """
    if l - t + 1 < 3:
        raise ValueError("window order must be >= 3")
    if require_hypothesis and not m2_det_hypothesis(T, t, l):
        raise HypothesisFailed(f"ratio hypothesis fails on window [{t}, {l}]")
    lower = float(T.diag[t - 1]) * float(np.prod(np.abs(T.sub[t - 1:l - 1]))) / relax
    return bool(detgtri(T.window(t, l)) > lower)


# ---------------------------------------------------------------------------
# Chain error measurement and certification
# ---------------------------------------------------------------------------

def _mp_zeros(T: TridiagonalMatrix, lo: int, hi: int):
    import mpmath as mp

    eigs, _ = mp.eigsy(mp.matrix(T.window(lo, hi).dense().tolist()))
    return sorted((-eigs[j] for j in range(eigs.rows)), reverse=True)


def _mp_shifted_solve(Bd, shift, rhs):
    import mpmath as mp

    A = Bd.copy()
    for j in range(A.rows):
        A[j, j] -= shift
    return mp.lu_solve(A, rhs)


def reference_paired_chain(B: TridiagonalMatrix, Rn: TridiagonalMatrix, r: int, i: int, b, dps: int = 40):
    """High-precision pairs-only chain with exact zeros (``mpmath``)."""
    import mpmath as mp

    with mp.workdps(dps):
        n = Rn.order
        w = window_for(r, i, n)
        mu = _mp_zeros(Rn, w.lo, w.hi)
        h = 2 ** (r - 1)
        wl, wr = window_for(r - 1, i - h, n), window_for(r - 1, i + h, n)
        lam = sorted(_mp_zeros(Rn, wl.lo, wl.hi) + _mp_zeros(Rn, wr.lo, wr.hi), reverse=True)
        Bd = mp.matrix(B.dense().tolist())
        x = mp.matrix([float(v) for v in b])
        for ell in range(len(lam)):
            x = _mp_shifted_solve(Bd, mu[ell + 1], Bd * x - lam[ell] * x)
        return np.array([float(v) for v in x])


def reference_scaled_chain(B: TridiagonalMatrix, Rn: TridiagonalMatrix, r: int, j: int, factors, b, dps: int = 40):
    """High-precision ``prod(factors) prod (B - xi)^-1 b`` for the window at ``(r, j)``."""
    import mpmath as mp

    with mp.workdps(dps):
        w = window_for(r, j, Rn.order)
        xi = _mp_zeros(Rn, w.lo, w.hi)
        Bd = mp.matrix(B.dense().tolist())
        x = mp.matrix([float(v) for v in b])
        L = len(xi)
        for step in range(1, L + 1):
            x = _mp_shifted_solve(Bd, xi[L - step], mp.mpf(float(factors[step - 1])) * x)
        return np.array([float(v) for v in x])


def chain_bound_checks(B: TridiagonalMatrix, Rn: TridiagonalMatrix, table: ZeroTable, rng=None,
                       em: ErrorModel = ErrorModel()):
    """Measure every paired and scaled chain against its bound.

    Yields dicts with ``kind``, ``key``, ``error`` and ``bound``. Right-hand
    sides are uniform in ``[-1, 1]``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    cc = CouplingCoefficients.from_matrix(Rn)
    n = Rn.order
    for r, i in table.keys():
        if r == 0:
            continue
        b = rng.uniform(-1, 1, B.order)
        bn = float(np.linalg.norm(b))
        got = apply_rational_chain(B, table.chain(r, i), b, final=False)
        ref = reference_paired_chain(B, Rn, r, i, b)
        yield {"kind": "paired", "key": (r, i), "error": float(np.linalg.norm(got - ref)),
               "bound": paired_chain_bound(table[(r, i)], bn, em)}
        # scaled chains as used at level r on both sides of block i
        s, h = 2 ** r, 2 ** (r - 1)
        for side, j in ((-1, i - h), (+1, i + h)):
            factors = cc.a[i - s + 1:i] if side < 0 else cc.c[i + s - 1:i:-1]
            if (side < 0 and i - s < 1) or (side > 0 and i + s > n):
                continue
            xi = table[(r - 1, j)]
            got = apply_scaled_inverse_chain(B, xi, factors, b)
            ref = reference_scaled_chain(B, Rn, r - 1, j, factors, b)
            yield {"kind": "scaled", "key": (r, i, side), "error": float(np.linalg.norm(got - ref)),
                   "bound": scaled_chain_bound(xi, factors, bn, em)}


def table_shifts(table: ZeroTable) -> np.ndarray:
    return np.concatenate([table[key] for key in table.keys()])


def certify_system(sys, table: ZeroTable, em: ErrorModel, report: ErrorReport,
                   conditions: Optional[ConditionCheck] = None, cap: int = DENSE_CAP) -> ErrorReport:
    """Fill ``report`` with bound constants and, when ``m * n <= cap``,
    measured chain errors; set ``certified``."""
    conditions = conditions if conditions is not None else check_conditions(sys, em)
    report.conditions_ok = conditions.ok
    report.diagnostics = dict(conditions.diagnostics)
    if not conditions.ok:
        report.certified = False
        return report
    cc = CouplingCoefficients.from_matrix(sys.Rn)
    lmin, lmax = conditions.diagnostics["B_lambda_min"], conditions.diagnostics["B_lambda_max"]
    c1 = c2 = c3 = 0.0
    for r, i in table.keys():
        c1 = max(c1, bound_chain_C1(table[(r, i)]))
        if r == 0:
            continue
        s, h = 2 ** r, 2 ** (r - 1)
        if i - s >= 1:
            x2, x3 = bound_chain_C2_C3(table[(r - 1, i - h)], cc.a[i - s + 1:i])
            c2, c3 = max(c2, x2), max(c3, x3)
        if i + s <= sys.n:
            x2, x3 = bound_chain_C2_C3(table[(r - 1, i + h)], cc.c[i + s - 1:i:-1])
            c2, c3 = max(c2, x2), max(c3, x3)
    shifts = table_shifts(table)
    ok = True
    try:
        report.bound_Q_max = float(max(bound_Q(lmax, lmin, mu, em) for mu in shifts))
        report.bound_xi = float(max(bound_xi((lmax + abs(mu)) / (lmin + abs(mu)), em) for mu in shifts))
    except BoundOverflow as exc:
        report.diagnostics["bound_overflow"] = str(exc)
        ok = False
    report.bound_C1, report.bound_C2, report.bound_C3 = c1, c2, c3
    report.diagnostics["kappa_source"] = "bisection extremes"
    if ok and sys.n * sys.m <= cap:
        worst = {"paired": 0.0, "scaled": 0.0}
        for item in chain_bound_checks(sys.B, sys.Rn, table, em=em):
            worst[item["kind"]] = max(worst[item["kind"]], item["error"] / max(item["bound"], TINY))
            ok = ok and item["error"] <= item["bound"]
        report.chain_errors = {f"{k}_error_over_bound": v for k, v in worst.items()}
    report.certified = ok
    return report
