"""
Domain types for sevensins.
"""

from .errors import (
    CostsMissingError,
    DataFormatError,
    DimensionMismatchError,
    InfeasibleStartError,
    InsufficientDataError,
    IterationLimitError,
    KappaOutOfRangeError,
    NoConvergenceError,
    NonFiniteError,
    NotIndefiniteError,
    NotPositiveDefiniteError,
    SevenSinsError,
    UsageError,
    ValidationError,
    ZeroMuError,
    ZeroPositionError,
)
from .report import SCHEMA_VERSION, Report, ReportSection, ReportTable
from .results import Finding, FindingKind, SolveResult, SolveStatus

__all__ = [
    "SevenSinsError",
    "NonFiniteError",
    "NoConvergenceError",
    "NotPositiveDefiniteError",
    "InsufficientDataError",
    "NotIndefiniteError",
    "KappaOutOfRangeError",
    "DimensionMismatchError",
    "CostsMissingError",
    "ZeroMuError",
    "ZeroPositionError",
    "InfeasibleStartError",
    "IterationLimitError",
    "ValidationError",
    "DataFormatError",
    "UsageError",
    "Finding",
    "FindingKind",
    "SolveResult",
    "SolveStatus",
    "Report",
    "ReportSection",
    "ReportTable",
    "SCHEMA_VERSION",
]
