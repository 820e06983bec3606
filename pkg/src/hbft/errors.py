"""Shared exception and warning types.

Every error raised by this package derives from one of the classes below, so
callers can distinguish bad inputs (ValueError family) from runtime failures
(RuntimeError family) with a single except clause.
"""

from __future__ import annotations


class DimensionMismatchError(ValueError):
    """An array argument has the wrong length for the potential's dimension."""


class CapabilityError(RuntimeError):
    """The object cannot perform the requested operation.

    Raised when a potential has no Hessian quadratic form, a friction
    schedule has no derivative, or a check needs a lower bound the potential
    does not declare.
    """


class ScheduleConsistencyError(RuntimeError):
    """A friction schedule produced a value inconsistent with its claims."""


class DivergenceError(RuntimeError):
    """A state or step produced non-finite components."""


class IntegrationError(RuntimeError):
    """The integrator could not continue (e.g. step size underflow).

    Carries the partial trajectory computed so far in ``partial`` when one
    exists, so callers can persist what was computed before the failure.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(ValueError):
    """A scenario or sweep configuration failed to parse or validate."""


class ContactLossWarning(UserWarning):
    """The reaction force is non-positive: the contact assumption broke."""
