"""Exception types shared across the package."""


class PsidoError(Exception):
    """Base class for library errors."""


class EvaluationError(PsidoError, ArithmeticError):
    """A symbol evaluated to NaN/Inf or divided by zero."""

    def __init__(self, message: str, index=None, point=None):
        self.index = index
        self.point = point
        super().__init__(message)


class DomainError(EvaluationError):
    """A real-valued expression left the domain of sqrt or log."""


class PreconditionError(PsidoError, ValueError):
    """An operation was called without its mathematical precondition."""


class SizeCapError(PsidoError, ValueError):
    """A grid or expression exceeded a configured size cap."""
