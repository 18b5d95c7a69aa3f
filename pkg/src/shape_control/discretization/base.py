"""Exception hierarchy and shared enumerations for Shape Control."""

from enum import Enum
from typing import Any, List, Optional


class EquationKind(str, Enum):
    """Which semi-discrete equation a path, trajectory or problem belongs to."""

    HEAT = "heat"
    WAVE = "wave"


class ShapeControlError(Exception):
    """Base exception for shape-control errors."""

    pass


class DomainError(ShapeControlError):
    """Exception raised when an index, time or length is out of range."""

    pass


class ContractError(ShapeControlError):
    """Exception raised when inputs violate a documented contract."""

    pass


class AdmissibilityError(ShapeControlError):
    """Exception raised when a deformation path leaves the admissible set."""

    pass


class ConfigurationError(ShapeControlError):
    """Exception raised when configuration is invalid."""

    pass


class CFLViolationError(ConfigurationError):
    """Exception raised when the wave time step exceeds the stability limit."""

    def __init__(self, message: str, dt: float, dt_max: float):
        super().__init__(message)
        self.dt = dt
        self.dt_max = dt_max


class DivergenceError(ShapeControlError):
    """Exception raised when an integrator produces non-finite values."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class ResolutionError(ShapeControlError):
    """Exception raised when a time series is too coarse for differentiation."""

    def __init__(self, message: str, relative_change: float):
        super().__init__(message)
        self.relative_change = relative_change


class SingularityError(ShapeControlError):
    """Exception raised when a Jacobian sample is singular."""

    def __init__(self, message: str, abs_det: float):
        super().__init__(message)
        self.abs_det = abs_det


class NonConvergenceError(ShapeControlError):
    """Exception raised when Gauss-Newton exhausts its iterations."""

    def __init__(self, message: str, residual_history: Optional[List[float]] = None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class RankDeficiencyError(ShapeControlError):
    """Exception raised when the control map loses rank at an iterate."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report
