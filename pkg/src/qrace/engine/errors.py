"""Exception types raised by the engine.

Invalid input raises a ``ValueError`` subclass. A missing equilibrium or an
unmet bound precondition is a verdict value, not an exception.
"""

from __future__ import annotations


class ScheduleError(ValueError):
    """Probability values do not define a valid race schedule."""


class DimensionError(ValueError):
    """Mismatched K, matrix shape or profile length."""


class PreconditionError(ValueError):
    """An operation was called outside the inputs it is defined for."""


class EnumerationLimitError(ValueError):
    """Support enumeration requested above its size cap."""


class SingularSystemError(ArithmeticError):
    """Linear system has no unique solution."""


class CertificateError(RuntimeError):
    """A dual certificate that should be feasible is not."""
