"""Tridiagonal storage, shifted solves, DETGTRI determinants and bisection.

All routines work on :class:`TridiagonalMatrix`, which stores the three
diagonals of

    [ b1  c1              ]
    [ a2  b2  c2          ]
    [     ..  ..  ..      ]
    [         an  bn      ]

as ``diag = (b1..bn)``, ``sub = (a2..an)`` and ``sup = (c1..c_{n-1})``.
Indices in the public API that refer to rows of such a matrix are 1-based,
matching the usual block-row numbering.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import LengthMismatch, NotSymmetrizable, PivotBreakdown, ZeroPivot

#: Unit roundoff of IEEE double precision.
UNIT_ROUNDOFF = 2.0 ** -53

# Stop bisection loops that can no longer shrink their bracket.
_MAX_BISECTION_STEPS = 2200


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TridiagonalMatrix:
    """Immutable tridiagonal matrix given by its three diagonals."""

    diag: np.ndarray
    sub: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        diag, sub, sup = _frozen(self.diag), _frozen(self.sub), _frozen(self.sup)
        if diag.size < 1:
            raise LengthMismatch("a tridiagonal matrix needs order >= 1")
        if sub.size != diag.size - 1 or sup.size != diag.size - 1:
            raise LengthMismatch(
                f"order {diag.size} needs off-diagonals of length {diag.size - 1}, "
                f"got sub={sub.size}, sup={sup.size}"
            )
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "sup", sup)

    # -- constructors -----------------------------------------------------
    @classmethod
    def symmetric(cls, diag: Sequence[float], off: Sequence[float]) -> "TridiagonalMatrix":
        return cls(diag, off, off)

    @classmethod
    def constant(cls, order: int, sub: float, diag: float, sup: float) -> "TridiagonalMatrix":
        """``tridiag(sub, diag, sup)`` of the given order."""
        return cls(np.full(order, diag), np.full(order - 1, sub), np.full(order - 1, sup))

    @classmethod
    def from_dense(cls, a) -> "TridiagonalMatrix":
        a = np.asarray(a, dtype=float)
        return cls(np.diag(a).copy(), np.diag(a, -1).copy(), np.diag(a, 1).copy())

    @classmethod
    def from_dict(cls, data: dict) -> "TridiagonalMatrix":
        t = cls(data["diag"], data["sub"], data["super"])
        if "order" in data and int(data["order"]) != t.order:
            raise LengthMismatch(f"declared order {data['order']} but diag has {t.order} entries")
        return t

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "diag": self.diag.tolist(),
            "sub": self.sub.tolist(),
            "super": self.sup.tolist(),
        }

    # -- basic queries ----------------------------------------------------
    @property
    def order(self) -> int:
        return int(self.diag.size)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.sub, self.sup))

    def norm_inf(self) -> float:
        """Maximum absolute row sum."""
        row = np.abs(self.diag).copy()
        row[1:] += np.abs(self.sub)
        row[:-1] += np.abs(self.sup)
        return float(row.max())

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def window(self, lo: int, hi: int) -> "TridiagonalMatrix":
        """Principal submatrix on rows/columns ``lo..hi`` (1-based, inclusive)."""
        SubmatrixWindow(lo, hi).check(self.order)
        return TridiagonalMatrix(self.diag[lo - 1:hi], self.sub[lo - 1:hi - 1], self.sup[lo - 1:hi - 1])

    def shifted(self, sigma: float) -> "TridiagonalMatrix":
        """Return ``T - sigma I``."""
        return TridiagonalMatrix(self.diag - sigma, self.sub, self.sup)

    def scaled(self, factor: float) -> "TridiagonalMatrix":
        return TridiagonalMatrix(self.diag * factor, self.sub * factor, self.sup * factor)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def __repr__(self):
        return f"TridiagonalMatrix(order={self.order}, symmetric={self.is_symmetric})"


@dataclass(frozen=True)
class SubmatrixWindow:
    """1-based inclusive index range ``lo..hi`` of a principal submatrix."""

    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def check(self, order: int) -> "SubmatrixWindow":
        if not 1 <= self.lo <= self.hi <= order:
            raise IndexError(f"window [{self.lo}, {self.hi}] outside 1..{order}")
        return self


@dataclass(frozen=True)
class EigenRequest:
    """Bisection settings.

    ``first`` and ``last`` select eigenvalues by 1-based ascending index;
    ``None`` means all of them.
    """

    tolerance: float = UNIT_ROUNDOFF
    first: Optional[int] = None
    last: Optional[int] = None

    def __post_init__(self):
        if not self.tolerance >= 0:
            raise ValueError("bisection tolerance must be nonnegative")


# ---------------------------------------------------------------------------
# Linear solves
# ---------------------------------------------------------------------------

def thomas_solve(diag, sub, sup, rhs, threshold: float = 0.0) -> np.ndarray:
    """Gaussian elimination without pivoting for a tridiagonal system.

    Raises :class:`ZeroPivot` when a pivot magnitude falls below ``threshold``
    (or is exactly zero).
    """
    d = list(map(float, diag))
    lo = list(map(float, sub))
    up = list(map(float, sup))
    y = list(map(float, rhs))
    n = len(d)
    if len(y) != n:
        raise LengthMismatch(f"rhs has length {len(y)}, matrix order is {n}")
    w = [0.0] * n
    piv = d[0]
    if piv == 0.0 or abs(piv) < threshold:
        raise ZeroPivot(f"pivot 1 is {piv!r}")
    w[0] = piv
    for i in range(1, n):
        m = lo[i - 1] / piv
        piv = d[i] - m * up[i - 1]
        if piv == 0.0 or abs(piv) < threshold:
            raise ZeroPivot(f"pivot {i + 1} is {piv!r}")
        w[i] = piv
        y[i] -= m * y[i - 1]
    x = [0.0] * n
    x[-1] = y[-1] / w[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (y[i] - up[i] * x[i + 1]) / w[i]
    return np.array(x)


def breakdown_threshold(T: TridiagonalMatrix) -> float:
    return UNIT_ROUNDOFF ** 2 * T.norm_inf()


def solve_shifted(T: TridiagonalMatrix, shift: float, rhs, breakdown: Optional[float] = None) -> np.ndarray:
    """Solve ``(T - shift I) x = rhs`` by elimination without pivoting.

    Parameters
    ----------
    T : TridiagonalMatrix
        Matrix such that ``T - shift I`` is symmetric positive definite (or at
        least has a stable LU factorization without pivoting).
    shift : float
        The shift ``sigma``.
    rhs : array_like
        Right-hand side of length ``T.order``.
    breakdown : float, optional
        Pivot magnitudes below this raise :class:`ZeroPivot`. Defaults to
        ``u**2 * ||T - shift I||_inf``.
    """
    diag = T.diag - shift
    if breakdown is None:
        breakdown = breakdown_threshold(TridiagonalMatrix(diag, T.sub, T.sup))
    return thomas_solve(diag, T.sub, T.sup, rhs, breakdown)


# ---------------------------------------------------------------------------
# Determinants and Sturm counts
# ---------------------------------------------------------------------------

def detgtri_pivots(T: TridiagonalMatrix, perturb: bool = False, exact: bool = False, shift=0.0) -> list:
    """Pivot sequence ``g`` of the DETGTRI recurrence for ``T - shift I``.

    ``g1 = b1`` and ``gi = bi - ai c(i-1) / g(i-1)``. A zero pivot raises
    :class:`PivotBreakdown` unless ``perturb`` is set, in which case it is
    replaced by ``+u ||T||_inf``. With ``exact=True`` the recurrence runs in
    rational arithmetic on the (exactly representable) float entries, and
    the shift is subtracted exactly too.
    """
    num = Fraction if exact else float
    sigma = num(shift)
    b = [num(v) - sigma for v in T.diag.tolist()]
    e = [num(a) * num(c) for a, c in zip(T.sub.tolist(), T.sup.tolist())]
    tiny = num(UNIT_ROUNDOFF) * num(T.norm_inf()) if perturb else None
    if perturb and tiny == 0:
        tiny = num(np.finfo(float).tiny)
    g = []
    prev = None
    for i, bi in enumerate(b):
        gi = bi if i == 0 else bi - e[i - 1] / prev
        if gi == 0:
            if not perturb:
                raise PivotBreakdown(f"DETGTRI pivot {i + 1} is exactly zero")
            gi = tiny
        g.append(gi)
        prev = gi
    return g


def detgtri(T: TridiagonalMatrix, perturb: bool = False, exact: bool = False, shift=0.0):
    """Determinant of ``T - shift I`` as the product of DETGTRI pivots."""
    det = Fraction(1) if exact else 1.0
    for gi in detgtri_pivots(T, perturb=perturb, exact=exact, shift=shift):
        det *= gi
    return det


def _pivmin(T: TridiagonalMatrix) -> float:
    p = UNIT_ROUNDOFF * T.norm_inf()
    return p if p > 0 else float(np.finfo(float).tiny)


def _sturm_counts(diag, e2, xs, pivmin):
    count = np.zeros(xs.shape, dtype=np.int64)
    q = None
    for i in range(diag.size):
        q = (diag[i] - xs) if i == 0 else (diag[i] - xs) - e2[i - 1] / q
        small = np.abs(q) < pivmin
        if small.any():
            q = np.where(small, np.where(q < 0, -pivmin, pivmin), q)
        count += q < 0
    return count


def _sturm_data(T: TridiagonalMatrix):
    e2 = T.sub * T.sup
    if np.any(e2 < 0):
        raise NotSymmetrizable("Sturm counts need a[i+1]*c[i] >= 0 for all i")
    return T.diag, e2


def sturm_counts(T: TridiagonalMatrix, xs) -> np.ndarray:
    """Vectorized :func:`sturm_count` over an array of points."""
    diag, e2 = _sturm_data(T)
    return _sturm_counts(diag, e2, np.asarray(xs, dtype=float), _pivmin(T))


def sturm_count(T: TridiagonalMatrix, x: float) -> int:
    """Number of eigenvalues of ``T`` strictly less than ``x``.

    Counts negative pivots of ``T - xI``; pivots smaller in magnitude than
    ``u ||T||_inf`` are replaced by that value with their sign kept (``+`` for
    an exact zero).
    """
    return int(sturm_counts(T, np.array([x]))[0])


def gershgorin_bounds(T: TridiagonalMatrix) -> Tuple[float, float]:
    radius = np.zeros(T.order)
    radius[1:] += np.abs(T.sub)
    radius[:-1] += np.abs(T.sup)
    return float(np.min(T.diag - radius)), float(np.max(T.diag + radius))


def mob_error_bound(T: TridiagonalMatrix, kappa: float) -> float:
    """Bisection error bound ``7.5 kappa max_i |b_i +- (|a_i| + |a_{i+1}|)|``.

    Off-diagonals are taken from the symmetrized matrix, i.e. ``sqrt(a c)``.
    """
    off = np.sqrt(np.abs(T.sub * T.sup))
    radius = np.zeros(T.order)
    radius[1:] += off
    radius[:-1] += off
    spread = np.maximum(np.abs(T.diag + radius), np.abs(T.diag - radius))
    return 7.5 * kappa * float(spread.max())


def bisect_with_work(T: TridiagonalMatrix, req: Optional[EigenRequest] = None):
    """Bisection returning ``(eigenvalues, work)``.

    ``work`` counts scalar Sturm pivot evaluations, a deterministic cost
    measure.
    """
    req = req or EigenRequest()
    diag, e2 = _sturm_data(T)
    q = T.order
    first = 1 if req.first is None else req.first
    last = q if req.last is None else req.last
    if not 1 <= first <= last <= q:
        raise IndexError(f"eigenvalue range {first}..{last} outside 1..{q}")
    if q == 1:
        return T.diag.copy(), 1
    pivmin = _pivmin(T)

    glo, ghi = gershgorin_bounds(T)
    pad = 2.0 * UNIT_ROUNDOFF * max(abs(glo), abs(ghi)) + 2.0 * pivmin
    glo -= pad
    ghi += pad

    idx = np.arange(first - 1, last)
    lo = np.full(idx.size, glo)
    hi = np.full(idx.size, ghi)
    active = np.ones(idx.size, dtype=bool)
    work = 0
    for _ in range(_MAX_BISECTION_STEPS):
        width_ok = (hi - lo) <= np.maximum(req.tolerance, 2.0 * UNIT_ROUNDOFF * (np.abs(lo) + np.abs(hi)))
        mid = 0.5 * (lo + hi)
        stuck = (mid <= lo) | (mid >= hi)
        active &= ~(width_ok | stuck)
        if not active.any():
            break
        sel = np.flatnonzero(active)
        counts = _sturm_counts(diag, e2, mid[sel], pivmin)
        work += sel.size * q
        below = counts > idx[sel]
        hi[sel] = np.where(below, mid[sel], hi[sel])
        lo[sel] = np.where(below, lo[sel], mid[sel])
    return 0.5 * (lo + hi), work


def eigenvalues_bisect(T: TridiagonalMatrix, req: Optional[EigenRequest] = None) -> np.ndarray:
    """Eigenvalues of a symmetric tridiagonal matrix by the method of bisection.

    Each eigenvalue is located independently by its index from Sturm counts,
    so the result is sorted ascending even for clustered spectra. Brackets
    start from the Gershgorin interval and stop once narrower than
    ``max(tolerance, 2u(|lo| + |hi|))``.
    """
    values, _ = bisect_with_work(T, req)
    return values


def symmetrize_similarity(T: TridiagonalMatrix) -> Tuple[np.ndarray, TridiagonalMatrix]:
    """Diagonal similarity ``S = D^-1 T D`` making ``T`` symmetric.

    Returns the scaling ``d`` (``d1 = 1``, ``dj = sqrt(aj / c(j-1)) d(j-1)``)
    and ``S`` whose off-diagonals are ``sign(a) sqrt(a c)``.
    """
    prod = T.sub * T.sup
    if np.any(prod <= 0):
        bad = int(np.flatnonzero(prod <= 0)[0]) + 1
        raise NotSymmetrizable(f"a[{bad + 1}] * c[{bad}] = {prod[bad - 1]!r} is not positive")
    if T.is_symmetric:
        return np.ones(T.order), T
    ratio = np.sqrt(T.sub / T.sup)
    d = np.concatenate([[1.0], np.cumprod(ratio)])
    off = np.sign(T.sub) * np.sqrt(prod)
    return d, TridiagonalMatrix.symmetric(T.diag, off)
