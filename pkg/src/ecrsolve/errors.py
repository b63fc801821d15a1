"""Exception types shared across the package."""


class EcrError(Exception):
    """Base class for all package errors."""


class ZeroPivot(EcrError, ArithmeticError):
    """Elimination without pivoting hit a pivot below the breakdown threshold."""


class PivotBreakdown(EcrError, ArithmeticError):
    """A DETGTRI pivot is exactly zero and no perturbation was requested."""


class NotSymmetrizable(EcrError, ValueError):
    """Some product ``a[i+1] * c[i]`` is not positive."""


class IndexOutOfGrid(EcrError, IndexError):
    """A block index is not valid for the requested reduction level."""


class LengthMismatch(EcrError, ValueError):
    pass


class ConditionViolation(EcrError):
    """The certification preconditions on ``B`` and ``Rn`` do not hold."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BoundOverflow(EcrError, ArithmeticError):
    """An error-bound formula has a non-positive denominator."""


class Singular(EcrError, ArithmeticError):
    pass


class NoConvergence(EcrError, RuntimeError):
    pass


class HypothesisFailed(EcrError):
    """The ratio hypothesis of the determinant lower bound does not hold."""
