"""
Tests for error classification and exit codes.
"""

import pytest

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
from shape_control.experiments.error_classifier import (
    EXIT_ADMISSIBILITY,
    EXIT_CONFIGURATION,
    EXIT_FAILURE,
    EXIT_NON_CONVERGENCE,
    classify_error,
)


class TestClassifyError:
    """Test suite for classify_error."""

    @pytest.mark.parametrize(
        "error, category, exit_code",
        [
            (ConfigurationError("bad key"), "configuration", EXIT_CONFIGURATION),
            (DomainError("M < 2"), "configuration", EXIT_CONFIGURATION),
            (FileNotFoundError("target.csv"), "configuration", EXIT_CONFIGURATION),
            (NonConvergenceError("stalled", [1.0, 0.5]), "non_convergence", EXIT_NON_CONVERGENCE),
            (RankDeficiencyError("rank 0"), "non_convergence", EXIT_NON_CONVERGENCE),
            (AdmissibilityError("|λ| = 0.6"), "admissibility", EXIT_ADMISSIBILITY),
            (DivergenceError("nan", step=3), "numerical", EXIT_FAILURE),
            (ResolutionError("coarse", relative_change=0.4), "numerical", EXIT_FAILURE),
            (SingularityError("det 0", abs_det=0.0), "numerical", EXIT_FAILURE),
            (ContractError("shape"), "internal", EXIT_FAILURE),
            (RuntimeError("boom"), "internal", EXIT_FAILURE),
        ],
    )
    def test_categories(self, error, category, exit_code):
        result_category, result_code, suggestion = classify_error(error)
        assert (result_category, result_code) == (category, exit_code)
        assert isinstance(suggestion, str) and suggestion

    def test_cfl_suggests_steps(self):
        error = CFLViolationError("too coarse", dt=0.28, dt_max=0.19)
        category, exit_code, suggestion = classify_error(error)
        assert (category, exit_code) == ("configuration", EXIT_CONFIGURATION)
        assert "0.19" in suggestion
