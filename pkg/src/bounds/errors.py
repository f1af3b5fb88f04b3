"""Exception types shared across the package."""

from __future__ import annotations


class BoundsError(Exception):
    """Base class for all package errors."""


class DomainError(BoundsError):
    """An argument left the mathematical domain of a function or entry."""


class PrecisionError(BoundsError):
    """The requested working precision is not supported."""


class EvalError(BoundsError):
    """Evaluation failed for a non-domain reason (unbound name, 0^0, ...)."""


class ExprSyntaxError(BoundsError):
    """Parse failure. Carries the byte offset and the expected-token set."""

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = expected
        detail = f" at offset {offset}"
        if expected:
            detail += " (expected " + " | ".join(expected) + ")"
        super().__init__(message + detail)


class ArityError(BoundsError):
    """A function call has the wrong number of arguments."""


class IoError(BoundsError):
    """Catalog file could not be read."""


class FormatError(BoundsError):
    """Catalog file is malformed. Carries a line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ValidationError(BoundsError):
    """A catalog entry failed validation. Carries the entry id."""

    def __init__(self, entry_id: str, reason: str):
        self.entry_id = entry_id
        super().__init__(f"{entry_id}: {reason}")


class MismatchedTarget(BoundsError):
    """Two entries do not bound the same quantity."""


class EmptyOverlap(BoundsError):
    """Two entries have no common subinterval."""
