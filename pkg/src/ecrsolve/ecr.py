"""Extended cyclic reduction for ``(B (x) I + I (x) Rn) X = Y``.

Block row ``i`` of the system reads
``a_i x_{i-1} + (B + b_i I) x_i + c_i x_{i+1} = y_i`` for ``i = 1..n`` with
``n = 2**k - 1``. Every matrix polynomial in ``B`` that appears during the
reduction is applied through its zeros (see :mod:`ecrsolve.zeros`) as a
chain of shifted tridiagonal solves.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .chains import apply_rational_chain, apply_scaled_inverse_chain
from .errors import LengthMismatch
from .tridiag import UNIT_ROUNDOFF, TridiagonalMatrix
from .zeros import CouplingCoefficients, ZeroTable, build_zero_table, level_count, level_indices

__all__ = [
    "SeparableSystem",
    "Solution",
    "ReductionState",
    "Reduction",
    "apply_rational_chain",
    "apply_scaled_inverse_chain",
    "apply_operator",
    "reduce",
    "back_substitute",
    "solve",
]


def apply_operator(B: TridiagonalMatrix, Rn: TridiagonalMatrix, X) -> np.ndarray:
    """Return ``Y`` with ``y_i = a_i x_{i-1} + (B + b_i I) x_i + c_i x_{i+1}``.

    ``X`` has shape ``(n, m)``, one block per row.
    """
    X = np.asarray(X, dtype=float)
    Y = Rn.diag[:, None] * X
    Y[1:] += Rn.sub[:, None] * X[:-1]
    Y[:-1] += Rn.sup[:, None] * X[1:]
    Y += B.diag[None, :] * X
    Y[:, 1:] += B.sub[None, :] * X[:, :-1]
    Y[:, :-1] += B.sup[None, :] * X[:, 1:]
    return Y


@dataclass(frozen=True, eq=False)
class SeparableSystem:
    """The pair ``(B, Rn)`` with right-hand side blocks ``rhs`` of shape ``(n, m)``."""

    B: TridiagonalMatrix
    Rn: TridiagonalMatrix
    rhs: np.ndarray

    def __post_init__(self):
        level_count(self.Rn.order)
        rhs = np.array(self.rhs, dtype=float)
        if rhs.ndim == 1 and self.B.order == 1:
            rhs = rhs[:, None]
        if rhs.shape != (self.Rn.order, self.B.order):
            raise LengthMismatch(f"rhs has shape {rhs.shape}, expected ({self.Rn.order}, {self.B.order})")
        rhs.setflags(write=False)
        object.__setattr__(self, "rhs", rhs)

    @property
    def k(self) -> int:
        return level_count(self.Rn.order)

    @property
    def n(self) -> int:
        return self.Rn.order

    @property
    def m(self) -> int:
        return self.B.order

    def with_rhs(self, rhs) -> "SeparableSystem":
        return SeparableSystem(self.B, self.Rn, rhs)

    def residual_rel(self, X) -> float:
        """``||A X - Y||_2 / ||Y||_2`` (absolute when ``Y = 0``)."""
        r = np.linalg.norm(apply_operator(self.B, self.Rn, X) - self.rhs)
        ny = np.linalg.norm(self.rhs)
        return float(r / ny) if ny > 0 else float(r)


@dataclass(frozen=True, eq=False)
class Solution:
    x: np.ndarray  # shape (n, m)

    def block(self, i: int) -> np.ndarray:
        """1-based block ``x_i``."""
        return self.x[i - 1]


@dataclass(eq=False)
class ReductionState:
    """Reduced right-hand sides ``p_i^(r)`` for the multiples ``i`` of ``2**r``."""

    level: int
    p: Dict[int, np.ndarray] = field(default_factory=dict)


@dataclass(eq=False)
class Reduction:
    states: List[ReductionState]

    @property
    def final(self) -> np.ndarray:
        top = self.states[-1]
        return top.p[2 ** top.level]


def _map(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


class _Context:
    """Shared state for one solve: matrices, zero table and couplings."""

    def __init__(self, sys: SeparableSystem, table: ZeroTable, coeffs: CouplingCoefficients, threads: int):
        if table.k != sys.k:
            raise ValueError(f"zero table has k={table.k}, system has k={sys.k}")
        self.B = sys.B
        self.table = table
        self.coeffs = coeffs
        self.n = sys.n
        self.threads = threads

    def chain(self, r: int, i: int, v) -> np.ndarray:
        """``(B_i^(r))^-1 B_{i-h}^(r-1) B_{i+h}^(r-1) v``."""
        z = apply_rational_chain(self.B, self.table.chain(r, i), v)
        return -z if r % 2 else z

    def neighbor(self, r: int, i: int, side: int, v) -> np.ndarray:
        """``alpha_i^(r) (B_{i-h}^(r-1))^-1 v`` (``side=-1``) or the
        ``gamma`` counterpart (``side=+1``)."""
        c = self.coeffs
        lead = c.a[i] if side < 0 else c.c[i]
        if r == 0:
            return lead * np.asarray(v, dtype=float)
        s, h = 2 ** r, 2 ** (r - 1)
        if side < 0:
            factors = c.a[i - s + 1:i]
        else:
            factors = c.c[i + s - 1:i:-1]
        z = apply_scaled_inverse_chain(self.B, self.table[(r - 1, i + side * h)], factors, v)
        z = lead * z
        return -z if (r - 1) % 2 else z


def reduce(sys: SeparableSystem, table: ZeroTable, coeffs: Optional[CouplingCoefficients] = None,
           threads: int = 1) -> Reduction:
    """Reduction phase.

    Starting from ``p_i^(0) = y_i``, level ``r`` computes for the odd
    multiples ``j`` of ``s = 2**r``
    ``q_j = (B_j^(r))^-1 B_{j-h}^(r-1) B_{j+h}^(r-1) p_j`` and then for the
    multiples ``i`` of ``2s``
    ``p_i^(r+1) = alpha_i^(r) (B_{i-h}^(r-1))^-1 q_{i-s}
    + gamma_i^(r) (B_{i+h}^(r-1))^-1 q_{i+s} - p_i^(r)``.

    Returns every level, since back-substitution needs all of them.
    """
    coeffs = coeffs or CouplingCoefficients.from_matrix(sys.Rn)
    ctx = _Context(sys, table, coeffs, threads)
    n, k = sys.n, sys.k
    state = ReductionState(0, {i: sys.rhs[i - 1].copy() for i in range(1, n + 1)})
    states = [state]
    for r in range(k - 1):
        s = 2 ** r
        odd = level_indices(r, n, odd_only=True)
        q = dict(zip(odd, _map(lambda j: ctx.chain(r, j, state.p[j]), odd, threads)))

        def next_p(i):
            left = ctx.neighbor(r, i, -1, q[i - s])
            right = ctx.neighbor(r, i, +1, q[i + s])
            return (left + right) - state.p[i]

        even = level_indices(r + 1, n)
        state = ReductionState(r + 1, dict(zip(even, _map(next_p, even, threads))))
        states.append(state)
    return Reduction(states)


def back_substitute(sys: SeparableSystem, table: ZeroTable, reduction: Reduction,
                    coeffs: Optional[CouplingCoefficients] = None, threads: int = 1) -> Solution:
    """Back-substitution phase, from the top level down with ``x_0 = x_{n+1} = 0``.

    For each odd multiple ``i`` of ``s = 2**r``,
    ``x_i = (B_i^(r))^-1 D_i [p_i^(r) - alpha-term(x_{i-s}) - gamma-term(x_{i+s})]``;
    neighbor terms at the grid boundary are dropped.
    """
    coeffs = coeffs or CouplingCoefficients.from_matrix(sys.Rn)
    ctx = _Context(sys, table, coeffs, threads)
    n, k = sys.n, sys.k
    x: Dict[int, np.ndarray] = {}
    for r in range(k - 1, -1, -1):
        s = 2 ** r
        p = reduction.states[r].p

        def solve_one(i):
            rhs = p[i]
            if i - s >= 1:
                rhs = rhs - ctx.neighbor(r, i, -1, x[i - s])
            if i + s <= n:
                rhs = rhs - ctx.neighbor(r, i, +1, x[i + s])
            return ctx.chain(r, i, rhs)

        odd = level_indices(r, n, odd_only=True)
        x.update(zip(odd, _map(solve_one, odd, threads)))
    return Solution(np.array([x[i] for i in range(1, n + 1)]).reshape(n, sys.m))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("ECR_THREADS", "1")))
    except ValueError:
        return 1


def solve(sys: SeparableSystem, kappa: float = UNIT_ROUNDOFF, certify: bool = False, threads: Optional[int] = None,
          table: Optional[ZeroTable] = None, em=None):
    """Solve ``sys`` by extended cyclic reduction.

    Parameters
    ----------
    sys : SeparableSystem
    kappa : float
        Bisection tolerance for the zero table.
    certify : bool
        Check the conditioning hypotheses first (raising
        :class:`~ecrsolve.errors.ConditionViolation` when they fail) and fill
        the report with the forward-error bound constants.
    threads : int, optional
        Worker threads used within a level. Defaults to ``ECR_THREADS`` or 1.
    table : ZeroTable, optional
        Precomputed zero table (for example loaded from a cache file).
    em : ErrorModel, optional

    Returns
    -------
    (Solution, ErrorReport)
    """
    from .verify import ErrorModel, ErrorReport, certify_system, check_conditions

    threads = default_threads() if threads is None else max(1, int(threads))
    em = em or ErrorModel()
    conditions = None
    if certify:
        conditions = check_conditions(sys, em)
        conditions.raise_if_failed()
    if table is None:
        table = build_zero_table(sys.Rn, sys.k, kappa, threads=threads)
    coeffs = CouplingCoefficients.from_matrix(sys.Rn)
    reduction = reduce(sys, table, coeffs, threads)
    sol = back_substitute(sys, table, reduction, coeffs, threads)
    report = ErrorReport(residual_rel=sys.residual_rel(sol.x))
    if certify:
        report = certify_system(sys, table, em, report, conditions)
    return sol, report
