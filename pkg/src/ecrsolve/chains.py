"""Matrix-polynomial applications as chains of shifted tridiagonal solves."""

from typing import Optional, Sequence

import numpy as np

from .errors import LengthMismatch
from .tridiag import TridiagonalMatrix, solve_shifted
from .zeros import PairedChain


def apply_rational_chain(B: TridiagonalMatrix, chain: PairedChain, b, final: bool = True,
                         breakdown: Optional[float] = None) -> np.ndarray:
    """Apply ``prod (B - mu_j)^-1 prod (B - lambda_j)`` to ``b``.

    Each pair ``(theta, phi)`` is applied as ``(B - theta)^-1 (B - phi) z``
    in the form ``(B - theta) delta = (theta - phi) z``, ``z <- z + delta``,
    so no product with ``B`` is formed. A pair with ``theta == phi`` leaves
    ``z`` untouched. The unpaired ``(B - mu_1)^-1`` is applied last unless
    ``final`` is false.

    Parameters
    ----------
    B : TridiagonalMatrix
        Symmetric matrix of order ``m``.
    chain : PairedChain
        Shift pairs and final shift, all below the spectrum of ``B``.
    b : array_like
        Vector of length ``m``.
    final : bool, optional
        Apply the final unpaired solve.
    breakdown : float, optional
        Pivot threshold forwarded to :func:`solve_shifted`.

    Returns
    -------
    numpy.ndarray
    """
    z = np.array(b, dtype=float)
    if z.shape != (B.order,):
        raise LengthMismatch(f"vector has shape {z.shape}, expected ({B.order},)")
    for theta, phi in chain.pairs:
        if theta == phi:
            continue
        z = z + solve_shifted(B, theta, (theta - phi) * z, breakdown)
    if final:
        z = solve_shifted(B, chain.final_shift, z, breakdown)
    return z


def apply_scaled_inverse_chain(B: TridiagonalMatrix, xi: Sequence[float], a_factors: Sequence[float], b,
                               breakdown: Optional[float] = None) -> np.ndarray:
    """Apply ``prod(a_factors) * prod (B - xi_j)^-1`` to ``b``.

    The scalar factors are interleaved with the solves,
    ``x_0 = b`` and ``(B - xi_{L-j+1}) x_j = a_j x_{j-1}``, so the product
    of many small couplings never underflows on its own.

    Parameters
    ----------
    xi : sequence of float
        Descending zeros (length ``L``), applied from the last to the first.
    a_factors : sequence of float
        Scalars ``a_1 .. a_L`` taken in order.
    """
    xi = [float(v) for v in xi]
    factors = [float(v) for v in a_factors]
    if len(xi) != len(factors):
        raise LengthMismatch(f"{len(factors)} scalar factors for {len(xi)} zeros")
    x = np.array(b, dtype=float)
    if x.shape != (B.order,):
        raise LengthMismatch(f"vector has shape {x.shape}, expected ({B.order},)")
    if any(f == 0.0 for f in factors):
        return np.zeros_like(x)
    L = len(xi)
    for j in range(1, L + 1):
        x = solve_shifted(B, xi[L - j], factors[j - 1] * x, breakdown)
    return x
