"""Extended cyclic reduction for separable block-tridiagonal systems.

Solves ``(B (x) I + I (x) Rn) X = Y`` with ``B`` and ``Rn`` tridiagonal and
``n = 2**k - 1`` blocks, applying every matrix polynomial through zeros
computed by bisection.
"""

from .chains import apply_rational_chain, apply_scaled_inverse_chain
from .classic_cr import PoissonBlockSystem, apply_Ar_inverse, cheb_zeros, cr_solve
from .ecr import SeparableSystem, Solution, back_substitute, reduce, solve
from .errors import (
    BoundOverflow,
    ConditionViolation,
    EcrError,
    HypothesisFailed,
    IndexOutOfGrid,
    LengthMismatch,
    NoConvergence,
    NotSymmetrizable,
    PivotBreakdown,
    Singular,
    ZeroPivot,
)
from .matrices import build_m1, build_m2
from .tridiag import UNIT_ROUNDOFF, EigenRequest, TridiagonalMatrix, detgtri, eigenvalues_bisect, solve_shifted
from .verify import ErrorModel, ErrorReport, check_conditions, dense_kron_solve
from .zeros import PairedChain, ZeroTable, build_zero_table, merge_product_zeros, pair_shifts, window_for

__version__ = "0.1.0"
