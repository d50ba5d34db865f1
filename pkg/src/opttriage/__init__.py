"""Triage C-like functions into easy/hard-to-optimize classes and pick compiler flags."""

from opttriage.features import FeatureSchema, FeatureVector, compute_max_depth, extract
from opttriage.minic import (
    Diagnostic,
    FunctionUnit,
    LoopNest,
    OpCounts,
    ParseError,
    SourceUnit,
    TripCount,
    parse_unit,
)

__version__ = "0.1.0"

__all__ = [
    "Diagnostic",
    "FeatureSchema",
    "FeatureVector",
    "FunctionUnit",
    "LoopNest",
    "OpCounts",
    "ParseError",
    "SourceUnit",
    "TripCount",
    "compute_max_depth",
    "extract",
    "parse_unit",
    "__version__",
]
