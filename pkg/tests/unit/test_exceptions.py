"""
Unit tests for vche2d exception classes.
"""

import pytest

from src.vche2d.utils.exceptions import (
    CFLViolationError,
    ConfigurationError,
    ContractionError,
    DomainError,
    ExperimentError,
    FieldError,
    FitError,
    GridError,
    NumericalError,
    NumericalInstabilityError,
    ParameterError,
    PreconditionError,
    SnapshotFormatError,
    ValidationError,
    VcheError,
)


class TestVcheError:
    """Test base VcheError class."""

    def test_basic_exception(self):
        """Test basic exception creation."""
        error = VcheError("Test error")
        assert str(error) == "Test error"
        assert error.message == "Test error"
        assert error.details == {}

    def test_exception_with_details(self):
        """Test exception with details."""
        details = {"dt": 0.05, "bound": 0.03}
        error = VcheError("dt exceeds the CFL bound", details)
        assert error.message == "dt exceeds the CFL bound"
        assert error.details == details
        assert "dt exceeds the CFL bound - Details:" in str(error)

    def test_exception_inheritance(self):
        """Test exception inheritance."""
        assert isinstance(VcheError("Test"), Exception)


class TestHierarchy:
    """Test the exception tree."""

    @pytest.mark.parametrize("cls", [
        GridError, FieldError, DomainError, ParameterError, PreconditionError,
        NumericalError, ConfigurationError, SnapshotFormatError, ExperimentError, FitError,
    ])
    def test_direct_subclasses(self, cls):
        error = cls("message")
        assert isinstance(error, VcheError)
        assert str(error) == "message"

    def test_numerical_errors(self):
        """Stepping failures share a base class."""
        assert isinstance(CFLViolationError("x"), NumericalError)
        assert isinstance(NumericalInstabilityError("x"), NumericalError)
        assert isinstance(ContractionError("x"), NumericalError)

    def test_validation_is_configuration(self):
        error = ValidationError("bad settings", {"grid.n_points": "must be a power of two >= 16"})
        assert isinstance(error, ConfigurationError)
        assert error.details["grid.n_points"] == "must be a power of two >= 16"


class TestContractionError:
    """Test the Picard contraction failure."""

    def test_distances_kept(self):
        error = ContractionError("Picard iteration does not contract", [0.1, 0.2, 0.4], {"t": 1.0})
        assert error.distances == [0.1, 0.2, 0.4]
        assert error.details == {"t": 1.0, "distances": [0.1, 0.2, 0.4]}

    def test_defaults(self):
        error = ContractionError("no contraction")
        assert error.distances == []
        assert error.details == {"distances": []}
