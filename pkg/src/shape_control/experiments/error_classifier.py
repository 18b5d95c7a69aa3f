"""Error classification for CLI exit codes and diagnostics."""

import logging
from typing import Tuple

from shape_control.discretization.base import (
    AdmissibilityError,
    CFLViolationError,
    ConfigurationError,
    ContractError,
    DivergenceError,
    DomainError,
    NonConvergenceError,
    RankDeficiencyError,
    ResolutionError,
    SingularityError,
)

logger = logging.getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_CONFIGURATION = 2
EXIT_NON_CONVERGENCE = 3
EXIT_ADMISSIBILITY = 4


def classify_error(error: BaseException) -> Tuple[str, int, str]:
    """
    Classify an error into a category, an exit code and a recovery suggestion.

    Args:
        error: The exception that ended the run

    Returns:
        Tuple of (error_category, exit_code, recovery_suggestion)
        error_category: 'configuration', 'non_convergence', 'admissibility',
        'numerical' or 'internal'
    """
    if isinstance(error, CFLViolationError):
        return (
            "configuration",
            EXIT_CONFIGURATION,
            f"Wave time step too large; use at least dt <= {error.dt_max:.6g} (increase 'steps').",
        )
    if isinstance(error, (ConfigurationError, DomainError, FileNotFoundError)):
        return (
            "configuration",
            EXIT_CONFIGURATION,
            "Invalid configuration or input file. Please check the run-config.",
        )
    if isinstance(error, RankDeficiencyError):
        return (
            "non_convergence",
            EXIT_NON_CONVERGENCE,
            "Control map lost rank. Increase K or check the non-degeneracy of the reference state.",
        )
    if isinstance(error, NonConvergenceError):
        return (
            "non_convergence",
            EXIT_NON_CONVERGENCE,
            "Gauss-Newton did not converge. Move the target closer to the reference trace "
            "or raise control.max_iter.",
        )
    if isinstance(error, AdmissibilityError):
        return (
            "admissibility",
            EXIT_ADMISSIBILITY,
            "Deformation path is not admissible: keep |lambda| < 0.5 (and wave slopes < 1).",
        )
    if isinstance(error, DivergenceError):
        return ("numerical", EXIT_FAILURE, f"State diverged at step {error.step}; reduce the time step.")
    if isinstance(error, ResolutionError):
        return ("numerical", EXIT_FAILURE, "Time grid too coarse; increase 'steps'.")
    if isinstance(error, SingularityError):
        return ("numerical", EXIT_FAILURE, "Jacobian sample is singular; B is undefined there.")
    if isinstance(error, ContractError):
        return ("internal", EXIT_FAILURE, "Inconsistent inputs were passed between components.")

    logger.warning(f"Unknown error type: {type(error).__name__} - {error}")
    return ("internal", EXIT_FAILURE, "An unexpected error occurred.")
