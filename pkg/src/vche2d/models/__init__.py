"""Grid, field, parameter and report models."""

from .fields import Frame, Grid, ScalarField, VectorField
from .params import EigenCoefficients, FilterParams, MomentSet, SemigroupTime
from .report import DecayReport, FittedExponent, ReportWarning, SeriesTable, Verdict

__all__ = [
    "Frame", "Grid", "ScalarField", "VectorField",
    "EigenCoefficients", "FilterParams", "MomentSet", "SemigroupTime",
    "DecayReport", "FittedExponent", "ReportWarning", "SeriesTable", "Verdict",
]
