"""
Shape derivatives of the state.

The linearized state v is the response of the state to a direction ψ. It
solves the forward scheme differentiated with respect to the path coefficients:

    heat  v' + A(φ)v = −A'(φ)[ψ]u_φ,          v(0) = 0
    wave  v'' + A(φ)v = −A'(φ)[ψ]u_φ,         v(0) = v'(0) = 0

Both use the integrator of the forward solve on the identical time grid, with
A'(φ)[ψ] frozen like A(φ) on each step. The result is the exact derivative of
the computed trace, so finite differences of Λ_h match it up to O(ε).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from shape_control.analysis.dynamics import PathSchedule, StateTrajectory, step_values
from shape_control.analysis.problem import ControlProblem
from shape_control.discretization.base import ContractError, EquationKind
from shape_control.discretization.grid import GridSpec
from shape_control.discretization.operators import DeformationPath, derivative_action
from shape_control.integrators.base import BaseIntegrator, StepForcing
from shape_control.integrators.crank_nicolson import CrankNicolsonIntegrator
from shape_control.integrators.stormer_verlet import StormerVerletIntegrator
from shape_control.models.reports import ContinuityReport, FrechetDirection, FrechetReport

logger = logging.getLogger(__name__)


@dataclass
class LinearizedState:
    """
    Response of the state to a deformation direction.

    Attributes:
        times: Time grid, identical to the reference trajectory's
        states: Array (S + 1, dim), zero at t = 0
        kind: Heat or wave
        base_path: Path the derivative is taken at (None for φ = 0)
        direction: Direction ψ
    """

    times: np.ndarray
    states: np.ndarray
    kind: EquationKind
    base_path: Optional[DeformationPath]
    direction: DeformationPath

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()


def integrator_for(kind: EquationKind, times: np.ndarray) -> BaseIntegrator:
    """The integrator the forward solves of ``kind`` use."""
    if EquationKind(kind) is EquationKind.HEAT:
        return CrankNicolsonIntegrator(times, logger=logger)
    return StormerVerletIntegrator(times, logger=logger)


def check_alignment(
    ref_traj: StateTrajectory,
    direction: DeformationPath,
    base: Optional[DeformationPath],
    grid: GridSpec,
) -> int:
    """
    Check that a direction and base path live on the reference time grid.

    Returns:
        Steps per segment of the direction on that grid

    Raises:
        ContractError: On any grid, horizon, kind or base mismatch
    """
    if ref_traj.grid != grid or direction.grid != grid:
        raise ContractError("Reference trajectory, direction and grid disagree")
    if direction.kind is not ref_traj.kind:
        raise ContractError(
            f"{direction.kind.value} direction given a {ref_traj.kind.value} reference"
        )
    if not np.isclose(direction.T, ref_traj.T, rtol=1e-12, atol=0.0):
        raise ContractError(f"Direction horizon {direction.T} differs from reference horizon {ref_traj.T}")
    if ref_traj.steps % direction.K != 0:
        raise ContractError(
            f"Reference time grid ({ref_traj.steps} steps) is not aligned with K={direction.K} segments"
        )
    ref_coeffs = None if ref_traj.path is None else ref_traj.path.coeffs
    base_coeffs = None if base is None else base.coeffs
    if ref_coeffs is None and base_coeffs is not None and np.any(base_coeffs):
        raise ContractError("Reference trajectory was computed without the base path")
    if base_coeffs is None and ref_coeffs is not None and np.any(ref_coeffs):
        raise ContractError("Reference trajectory was computed with a nonzero path")
    if ref_coeffs is not None and base_coeffs is not None and not np.array_equal(ref_coeffs, base_coeffs):
        raise ContractError("Reference trajectory was computed with a different base path")
    return ref_traj.steps // direction.K


def linearized_forcing(
    ref_traj: StateTrajectory,
    base: Optional[DeformationPath],
    direction: DeformationPath,
    direction_steps_per_segment: int,
) -> StepForcing:
    """Samples −A'(φ_n)[ψ_n]u at both ends of each step."""
    grid = ref_traj.grid
    times = ref_traj.times
    base_schedule = PathSchedule(grid, base, times, ref_traj.steps_per_segment)
    positions = ref_traj.positions

    def forcing(n: int):
        lambdas = base_schedule.lambdas(n)
        psi = step_values(direction, n, times, direction_steps_per_segment)
        return (
            -derivative_action(lambdas, psi, positions[n], grid),
            -derivative_action(lambdas, psi, positions[n + 1], grid),
        )

    return forcing


def _gateaux(
    kind: EquationKind,
    base: Optional[DeformationPath],
    direction: DeformationPath,
    ref_traj: StateTrajectory,
    grid: GridSpec,
) -> LinearizedState:
    if ref_traj.kind is not kind:
        raise ContractError(f"{kind.value} derivative given a {ref_traj.kind.value} reference")
    spk = check_alignment(ref_traj, direction, base, grid)
    dim = ref_traj.states.shape[1]
    if direction.is_zero():
        states = np.zeros((ref_traj.times.size, dim))
    else:
        integrator = integrator_for(kind, ref_traj.times)
        schedule = PathSchedule(grid, base, ref_traj.times, ref_traj.steps_per_segment)
        forcing = linearized_forcing(ref_traj, base, direction, spk)
        states = integrator.forward(np.zeros(dim), schedule, forcing)
    return LinearizedState(ref_traj.times.copy(), states, kind, base, direction)


def gateaux_heat(
    base: Optional[DeformationPath],
    direction: DeformationPath,
    ref_traj: StateTrajectory,
    grid: GridSpec,
) -> LinearizedState:
    """
    Linearized heat state v solving v' + A(φ)v = −A'(φ)[ψ]u_φ, v(0) = 0.

    Args:
        base: Base path φ (None for 0)
        direction: Direction ψ
        ref_traj: Heat trajectory of the base path
        grid: Grid specification

    Raises:
        ContractError: If the time grids, horizons or base paths disagree
    """
    return _gateaux(EquationKind.HEAT, base, direction, ref_traj, grid)


def gateaux_wave(
    base: Optional[DeformationPath],
    direction: DeformationPath,
    ref_traj: StateTrajectory,
    grid: GridSpec,
) -> LinearizedState:
    """
    Linearized wave state Y = (v, ∂_t v), forced on the velocity equation only.

    Raises:
        ContractError: If the time grids, horizons or base paths disagree
    """
    return _gateaux(EquationKind.WAVE, base, direction, ref_traj, grid)


def gateaux(
    base: Optional[DeformationPath],
    direction: DeformationPath,
    ref_traj: StateTrajectory,
    grid: GridSpec,
) -> LinearizedState:
    """Dispatch on the reference trajectory's kind."""
    return _gateaux(ref_traj.kind, base, direction, ref_traj, grid)


def _fit_slope(eps: Sequence[float], values: Sequence[float]) -> Optional[float]:
    eps_arr = np.asarray(eps, dtype=float)
    val_arr = np.asarray(values, dtype=float)
    mask = (eps_arr > 0) & (val_arr > 0)
    if mask.sum() < 2:
        return None
    return float(np.polyfit(np.log(eps_arr[mask]), np.log(val_arr[mask]), 1)[0])


def frechet_residual(
    problem: ControlProblem,
    directions: Sequence[DeformationPath],
    eps_list: Sequence[float],
) -> FrechetReport:
    """
    Remainders ‖Λ_h(εψ) − Λ_h(0) − ε·dΛ_h(0)ψ‖ over directions and scales.

    Args:
        problem: Problem fixing the equation, data and time grid
        directions: Nonzero directions ψ (εψ must be admissible)
        eps_list: Scales ε

    Returns:
        FrechetReport with per-direction log-log slopes (≈ 2) and the sup of
        remainder/ε at each ε

    Raises:
        ContractError: If a direction is zero
        AdmissibilityError: If some εψ is not admissible
    """
    reference = problem.reference()
    z_d = reference.final_state
    records: List[FrechetDirection] = []
    sup_over_eps = np.zeros(len(eps_list))
    for index, direction in enumerate(directions):
        if direction.is_zero():
            raise ContractError("Fréchet check needs nonzero directions")
        problem.check_path(direction)
        derivative = gateaux(None, direction, reference, problem.grid).final_state
        remainders = []
        for e_index, eps in enumerate(eps_list):
            trace = problem.solve(direction.scaled(eps)).final_state
            remainder = float(np.linalg.norm(trace - z_d - eps * derivative))
            remainders.append(remainder)
            sup_over_eps[e_index] = max(sup_over_eps[e_index], remainder / eps)
        slope = _fit_slope(eps_list, remainders)
        logger.info(f"Fréchet remainder slope for direction {index}: {slope}")
        records.append(FrechetDirection(label=f"direction_{index}", remainders=remainders, slope=slope))

    slopes = [r.slope for r in records if r.slope is not None]
    return FrechetReport(
        kind=problem.kind.value,
        eps=[float(e) for e in eps_list],
        directions=records,
        sup_remainders=sup_over_eps.tolist(),
        min_slope=min(slopes) if slopes else None,
    )


def derivative_continuity(
    problem: ControlProblem,
    base_direction: DeformationPath,
    direction: DeformationPath,
    eps_list: Sequence[float],
) -> ContinuityReport:
    """
    Distances ‖dΛ_h(εφ₁)ψ − dΛ_h(0)ψ‖ for the scales ε.

    Continuity of the derivative shows as a fitted slope close to 1.
    """
    problem.check_path(base_direction)
    problem.check_path(direction)
    reference = problem.reference()
    at_zero = gateaux(None, direction, reference, problem.grid).final_state
    distances = []
    for eps in eps_list:
        base = base_direction.scaled(eps)
        base_ref = problem.solve(base)
        at_base = gateaux(base, direction, base_ref, problem.grid).final_state
        distances.append(float(np.linalg.norm(at_base - at_zero)))
    return ContinuityReport(
        kind=problem.kind.value,
        eps=[float(e) for e in eps_list],
        distances=distances,
        slope=_fit_slope(eps_list, distances),
    )
