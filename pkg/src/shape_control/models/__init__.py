"""Pydantic models for run-configs and reports."""

from shape_control.models.reports import (
    BasinReport,
    ContinuityReport,
    DualityPair,
    DualityReport,
    FrechetDirection,
    FrechetReport,
    NDDReport,
    NormBoundReport,
    SurjectivityReport,
    UniqueContinuationReport,
)

__all__ = [
    "BasinReport",
    "ContinuityReport",
    "DualityPair",
    "DualityReport",
    "FrechetDirection",
    "FrechetReport",
    "NDDReport",
    "NormBoundReport",
    "SurjectivityReport",
    "UniqueContinuationReport",
]
