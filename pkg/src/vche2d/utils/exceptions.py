"""
vche2d Exception Classes

Exception hierarchy for grid construction, operators, time stepping,
configuration and the experiment harness.
"""

from typing import Any, Dict, Optional


class VcheError(Exception):
    """Base exception for all vche2d errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} - Details: {self.details}"
        return self.message


class GridError(VcheError):
    """Invalid grid construction."""
    pass


class FieldError(VcheError):
    """Fields combined across different grids or frames."""
    pass


class DomainError(VcheError):
    """Mapped or dilated points fall outside the computational box."""
    pass


class ParameterError(VcheError):
    """Invalid numerical parameter."""
    pass


class PreconditionError(VcheError):
    """Operation called on data violating its precondition."""
    pass


class NumericalError(VcheError):
    """Time stepping and iteration failures."""
    pass


class CFLViolationError(NumericalError):
    """Explicit step exceeds the advective stability bound; the step is rejected."""
    pass


class NumericalInstabilityError(NumericalError):
    """Non-finite values detected in the evolved field."""
    pass


class ContractionError(NumericalError):
    """Picard iteration failed to contract."""

    def __init__(self, message: str, distances: Optional[list] = None,
                 details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        self.distances = list(distances or [])
        details.setdefault("distances", self.distances)
        super().__init__(message, details)


class ConfigurationError(VcheError):
    """Configuration related errors."""
    pass


class ValidationError(ConfigurationError):
    """Configuration validation errors; details map field name to message."""
    pass


class SnapshotFormatError(VcheError):
    """Malformed snapshot file."""
    pass


class ExperimentError(VcheError):
    """Experiment lookup or execution errors."""
    pass


class FitError(VcheError):
    """Decay-exponent fitting errors."""
    pass
