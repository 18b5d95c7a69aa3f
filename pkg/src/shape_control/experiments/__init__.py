"""Command-line front end, experiment runner and output files."""

from shape_control.experiments.error_classifier import classify_error
from shape_control.experiments.runner import ExperimentRunner, bmatrix, build_problem

__all__ = ["ExperimentRunner", "bmatrix", "build_problem", "classify_error"]
