"""Exception types shared across the package."""


class IstcovError(Exception):
    """Base class for all package errors."""


class InvalidInput(IstcovError):
    """An argument violates a documented precondition."""


class NotPositiveDefinite(IstcovError):
    """A matrix required to be positive definite is not.

    Carries ``lambda_min``, the offending smallest eigenvalue (or the
    nonpositive Cholesky pivot value when detected that way).
    """

    def __init__(self, message, lambda_min=None):
        super().__init__(message)
        self.lambda_min = lambda_min


class InsufficientData(IstcovError):
    """Too few observations for the requested computation."""


class ParseError(IstcovError):
    """A file row could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class DuplicateBar(IstcovError):
    """Two bars share the same (symbol, timestamp) or time slot."""


class MissingBar(IstcovError):
    """A symbol has no bar for an expected time slot."""

    def __init__(self, symbol, slot):
        super().__init__(f"missing bar for symbol {symbol!r} at slot {slot}")
        self.symbol = symbol
        self.slot = slot


class EmptyInput(IstcovError):
    """An input file contains no data rows."""


class UsageError(IstcovError):
    """Invalid command-line or configuration usage."""
