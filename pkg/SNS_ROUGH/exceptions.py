"""Errors raised by the simulator and the verification toolkit."""

from typing import Any


class SNSRoughError(Exception):
    """Base class for all package errors."""


class ValidationFailure(SNSRoughError, ValueError):
    """Raised when an input violates a documented precondition."""


class GridMismatchError(ValidationFailure):
    """Raised when two fields living on different grids are combined."""


class NumericalAbort(SNSRoughError):
    """Raised when a run produces a NaN or overflows.

    Attributes:
        step: Time step at which the offending value appeared
        norm_name: Name of the norm that was checked
        value: The offending value
        partial: Whatever was computed before the abort (trajectory or diagnostics)

    """

    def __init__(self, step: int, norm_name: str, value: float, partial: Any = None):
        self.step = step
        self.norm_name = norm_name
        self.value = value
        self.partial = partial
        super().__init__(f"numerical abort at step {step}: {norm_name} = {value!r}")
