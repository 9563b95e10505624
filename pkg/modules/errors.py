# ============================================================================
# MODULE: ERRORS
# ============================================================================
# Exception hierarchy shared by the kernel, the operator and the CLI
# ============================================================================


class QOperatorError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(QOperatorError, ValueError):
    """An argument violates a documented precondition."""


class DomainExceeded(QOperatorError, ArithmeticError):
    """A series is evaluated outside its convergence domain (plus margin)."""


class NonConverged(QOperatorError, ArithmeticError):
    """k_max terms were summed before the truncation rule was met."""


class QOverflow(QOperatorError, OverflowError):
    """A product of q-integers left the double-precision range."""


class UsageError(QOperatorError):
    """Bad command line or config file input."""

    def __init__(self, message: str, key: str = None):
        super().__init__(message)
        self.key = key
