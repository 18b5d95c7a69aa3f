"""Time integrators for the semi-discrete heat and wave equations."""

from shape_control.integrators.base import AdjointSweep, BaseIntegrator, OperatorSchedule
from shape_control.integrators.crank_nicolson import CrankNicolsonIntegrator
from shape_control.integrators.stormer_verlet import StormerVerletIntegrator

__all__ = [
    "AdjointSweep",
    "BaseIntegrator",
    "CrankNicolsonIntegrator",
    "OperatorSchedule",
    "StormerVerletIntegrator",
]
