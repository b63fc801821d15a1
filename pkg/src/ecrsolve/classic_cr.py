"""Classic cyclic reduction for the five-point Poisson block system.

The system has ``n = 2**(k+1) - 1`` block rows
``u_{i-1} + A u_i + u_{i+1} = g_i`` with ``A = tridiag(1, -4, 1)``.
Level matrices follow ``A^(0) = A`` and ``A^(r+1) = 2I - (A^(r))^2``; they
are never formed, but applied through the Chebyshev factorization
``A^(r) = s_r prod_i (A - lambda_i^(r) I)`` with ``s_0 = 1`` and
``s_r = -1`` for ``r >= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from .errors import LengthMismatch
from .matrices import poisson_block
from .tridiag import TridiagonalMatrix, solve_shifted


@dataclass(frozen=True)
class ChebyshevZeroSet:
    r: int
    zeros: np.ndarray

    def __len__(self):
        return len(self.zeros)


def cheb_zeros(r: int) -> ChebyshevZeroSet:
    """``lambda_i^(r) = -2 cos((2i - 1) pi / 2**(r+1))`` for ``i = 1..2**r``."""
    if r < 0:
        raise ValueError("level must be >= 0")
    i = np.arange(1, 2 ** r + 1)
    zeros = -2.0 * np.cos((2 * i - 1) * math.pi / 2 ** (r + 1))
    zeros.setflags(write=False)
    return ChebyshevZeroSet(r, zeros)


def level_sign(r: int) -> float:
    return 1.0 if r == 0 else -1.0


def apply_Ar_inverse(m: int, r: int, b, A: TridiagonalMatrix = None) -> np.ndarray:
    """``(A^(r))^-1 b`` via ``2**r`` shifted tridiagonal solves."""
    A = A if A is not None else poisson_block(m)
    z = np.asarray(b, dtype=float)
    if z.shape != (m,):
        raise LengthMismatch(f"vector has shape {z.shape}, expected ({m},)")
    for lam in cheb_zeros(r).zeros:
        z = solve_shifted(A, lam, z)
    return level_sign(r) * z


def apply_Ar(m: int, r: int, v, A: TridiagonalMatrix = None) -> np.ndarray:
    """``A^(r) v`` as ``2**r`` shifted tridiagonal products."""
    A = A if A is not None else poisson_block(m)
    z = np.asarray(v, dtype=float)
    for lam in cheb_zeros(r).zeros:
        z = A.matvec(z) - lam * z
    return level_sign(r) * z


def dense_level_matrix(m: int, r: int) -> np.ndarray:
    """``A^(r)`` built densely from ``A^(r+1) = 2I - (A^(r))^2``."""
    Ar = poisson_block(m).dense()
    for _ in range(r):
        Ar = 2.0 * np.eye(m) - Ar @ Ar
    return Ar


def factored_level_matrix(m: int, r: int) -> np.ndarray:
    """``s_r prod (A - lambda_i^(r) I)`` built densely."""
    A = poisson_block(m).dense()
    P = np.eye(m)
    for lam in cheb_zeros(r).zeros:
        P = P @ (A - lam * np.eye(m))
    return level_sign(r) * P


def chebyshev_P(r: int, x) -> np.ndarray:
    """Scalar ``P_{2^r}`` from ``P_1(x) = x`` and ``P_{2j} = 2 - P_j^2``."""
    p = np.asarray(x, dtype=float)
    for _ in range(r):
        p = 2.0 - p * p
    return p


@dataclass(frozen=True, eq=False)
class PoissonBlockSystem:
    """Right-hand sides ``g`` of shape ``(2**(k+1) - 1, m)``."""

    m: int
    k: int
    g: np.ndarray

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if self.k < 0 or self.m < 1:
            raise ValueError("need k >= 0 and m >= 1")
        if g.shape != (self.n, self.m):
            raise LengthMismatch(f"g has shape {g.shape}, expected ({self.n}, {self.m})")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return 2 ** (self.k + 1) - 1

    def dense(self) -> np.ndarray:
        n, m = self.n, self.m
        T = np.eye(n, k=1) + np.eye(n, k=-1)
        return np.kron(np.eye(n), poisson_block(m).dense()) + np.kron(T, np.eye(m))


def cr_solve(sys: PoissonBlockSystem) -> np.ndarray:
    """Solve the Poisson block system by classic cyclic reduction.

    Returns the blocks ``u_i`` as an array of shape ``(n, m)``.
    """
    m, k, n = sys.m, sys.k, sys.n
    A = poisson_block(m)
    levels: List[Dict[int, np.ndarray]] = [{i: sys.g[i - 1].copy() for i in range(1, n + 1)}]
    for r in range(k):
        s = 2 ** r
        g = levels[-1]
        levels.append({i: g[i - s] - apply_Ar(m, r, g[i], A) + g[i + s] for i in range(2 * s, n + 1, 2 * s)})
    zero = np.zeros(m)
    u: Dict[int, np.ndarray] = {}
    for r in range(k, -1, -1):
        s = 2 ** r
        g = levels[r]
        for i in range(s, n + 1, 2 * s):
            rhs = g[i] - u.get(i - s, zero) - u.get(i + s, zero)
            u[i] = apply_Ar_inverse(m, r, rhs, A)
    return np.array([u[i] for i in range(1, n + 1)])
