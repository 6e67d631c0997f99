"""Exception types shared across the package."""


class QfsplitError(Exception):
    """Base class for errors raised by this package."""


class ParseError(QfsplitError):
    """Malformed polynomial or fixture text. Carries a character position."""

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (position {position})")
        self.position = position


class DomainError(QfsplitError):
    """Input violates a documented precondition (wrong degree, bad modulus, ...)."""


class InternalInvariantError(QfsplitError):
    """An arithmetic invariant that should hold for all valid inputs failed."""
