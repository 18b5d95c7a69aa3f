"""
Adjoint states, the duality identity and the unique-continuation chain.

The adjoint is the exact transpose of the forward integrator run backward
from X(T) = c. Pairing it with the linearized forcing reproduces ⟨v(T), c⟩
to roundoff, so Gᵀc is available without forming the control map G.

The jump formulation −∂_t X + AX = c⊗δ_{t=T} describes the same pairing
functional; here c is imposed as the terminal value of the backward solve.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from shape_control.analysis.dynamics import (
    PathSchedule,
    StateTrajectory,
    step_values,
    time_grid,
)
from shape_control.analysis.problem import ControlProblem
from shape_control.analysis.sensitivity import gateaux, integrator_for, linearized_forcing
from shape_control.constants import (
    DEFAULT_DUALITY_PAIRS,
    DEFAULT_UC_TRIALS,
    NDD_RELATIVE_THRESHOLD,
    NDD_WINDOW_FRACTION,
    RESOLUTION_MAX_CHANGE,
    UC_RECONSTRUCTION_TOLERANCE,
    UC_RESIDUAL_TOLERANCE,
)
from shape_control.discretization.base import (
    ContractError,
    DomainError,
    EquationKind,
    ResolutionError,
)
from shape_control.discretization.grid import GridSpec
from shape_control.discretization.operators import (
    DeformationPath,
    derivative_coefficients,
    laplacian_matrix,
    layer1_bracket,
)
from shape_control.integrators.base import AdjointSweep
from shape_control.models.reports import (
    DualityPair,
    DualityReport,
    NDDReport,
    UniqueContinuationReport,
)

logger = logging.getLogger(__name__)

DUALITY_TOLERANCE = {EquationKind.HEAT: 1e-6, EquationKind.WAVE: 1e-5}


@dataclass
class AdjointTrajectory:
    """
    Backward solution of the transpose system.

    Attributes:
        grid: Grid specification
        times: Same time grid as the forward solve
        states: Array (S + 1, dim); heat X_n, wave [p_n, q_n]
        kind: Heat or wave
        terminal_data: c, equal to states[-1]
        steps_per_segment: Steps per path segment of the time grid
        stages: Heat stage vectors Z_n paired with the forcing of step n
    """

    grid: GridSpec
    times: np.ndarray
    states: np.ndarray
    kind: EquationKind
    terminal_data: np.ndarray
    steps_per_segment: int = 1
    stages: Optional[np.ndarray] = None

    @property
    def observed(self) -> np.ndarray:
        """
        Component seen by interior forcing: X for heat, q for wave.

        Shape (S + 1, n).
        """
        return self.states[:, -self.grid.n_interior :]

    def sweep(self) -> AdjointSweep:
        return AdjointSweep(states=self.states, stages=self.stages)

    def energy(self) -> np.ndarray:
        """
        ½‖p‖² + ½⟨Aq, q⟩ of a wave adjoint at φ = 0.

        Raises:
            ContractError: For heat adjoints
        """
        if self.kind is not EquationKind.WAVE:
            raise ContractError("Adjoint energy is defined for wave adjoints")
        n = self.grid.n_interior
        p, q = self.states[:, :n], self.states[:, n:]
        matrix = laplacian_matrix(self.grid)
        return 0.5 * np.einsum("ti,ti->t", p, p) + 0.5 * np.einsum("ti,ij,tj->t", q, matrix, q)


def _solve_adjoint(
    kind: EquationKind,
    c: np.ndarray,
    T: float,
    steps: int,
    grid: GridSpec,
    path: Optional[DeformationPath],
    K: int,
) -> AdjointTrajectory:
    factor = 2 if kind is EquationKind.WAVE else 1
    c = np.asarray(c, dtype=float)
    if c.shape != (factor * grid.n_interior,):
        raise ContractError(
            f"Terminal vector has shape {c.shape}, expected ({factor * grid.n_interior},) "
            f"for {kind.value}"
        )
    if path is not None:
        K = path.K
    times, steps_per_segment = time_grid(T, K, steps)
    schedule = PathSchedule(grid, path, times, steps_per_segment)
    integrator = integrator_for(kind, times)
    sweep = integrator.backward(c, schedule)
    return AdjointTrajectory(
        grid=grid,
        times=times,
        states=sweep.states,
        kind=kind,
        terminal_data=c.copy(),
        steps_per_segment=steps_per_segment,
        stages=sweep.stages,
    )


def solve_adjoint_heat(
    c: np.ndarray,
    T: float,
    steps: int,
    grid: GridSpec,
    path: Optional[DeformationPath] = None,
    K: int = 1,
) -> AdjointTrajectory:
    """
    Heat adjoint: ∂_t X = A(φ)ᵀX backward from X(T) = c.

    Args:
        c: Terminal interior vector
        T: Horizon
        steps: Requested steps (aligned with K segments like the forward solve)
        grid: Grid specification
        path: Base path (None for φ = 0, where Aᵀ = A)
        K: Segments of the time grid when path is None

    Raises:
        ContractError: If c does not have interior dimension
    """
    return _solve_adjoint(EquationKind.HEAT, c, T, steps, grid, path, K)


def solve_adjoint_wave(
    c: np.ndarray,
    T: float,
    steps: int,
    grid: GridSpec,
    path: Optional[DeformationPath] = None,
    K: int = 1,
) -> AdjointTrajectory:
    """
    Wave adjoint on [p, q], the transpose block system run backward from c = (c_u, c_v).

    Raises:
        ContractError: If c does not have dimension 2n
    """
    return _solve_adjoint(EquationKind.WAVE, c, T, steps, grid, path, K)


def solve_adjoint(
    problem: ControlProblem, c: np.ndarray, path: Optional[DeformationPath] = None
) -> AdjointTrajectory:
    """Adjoint on the problem's time grid."""
    if path is not None:
        problem.check_path(path)
    return _solve_adjoint(problem.kind, c, problem.T, problem.steps, problem.grid, path, problem.K)


# ============================================================================
# Control-map transpose and duality
# ============================================================================


def basis_weights(problem: ControlProblem, times: np.ndarray, steps_per_segment: int) -> np.ndarray:
    """
    Value of the segment-k basis function frozen on each step, shape (S, K).

    Heat: indicator of segment k. Wave: the hat function of knot k + 1.
    """
    steps = times.size - 1
    weights = np.zeros((steps, problem.K))
    if problem.kind is EquationKind.HEAT:
        weights[np.arange(steps), np.arange(steps) // steps_per_segment] = 1.0
        return weights
    for k in range(problem.K):
        unit = problem.basis_path(1, k)
        weights[:, k] = [step_values(unit, n, times, steps_per_segment)[0] for n in range(steps)]
    return weights


def control_map_transpose(
    c: np.ndarray,
    problem: ControlProblem,
    path: Optional[DeformationPath] = None,
    reference: Optional[StateTrajectory] = None,
    adjoint: Optional[AdjointTrajectory] = None,
) -> np.ndarray:
    """
    Gᵀc without forming G: one backward solve and the layer-1 pairings.

    Entry (j - 1)·K + k is −Σ_n w_{n,k}·dt/2·(b_n(u_n)·a_n + b_n(u_{n+1})·b'_n) at
    row j, with b_n(u) = (dc_j u_(1,j) + de_j u_(2,j)) the derivative stencil
    and (a_n, b'_n) the adjoint pairing vectors on layer 1.

    Args:
        c: Terminal vector of trace dimension
        problem: Control problem
        path: Base path (None for φ = 0)
        reference: Trajectory of the base path, solved if not given
        adjoint: Adjoint for c, solved if not given

    Returns:
        Vector of length (N - 1)·K
    """
    c = problem.check_trace(c, "c")
    grid = problem.grid
    if reference is None:
        reference = problem.reference() if path is None else problem.solve(path)
    if adjoint is None:
        adjoint = solve_adjoint(problem, c, path)
    if not np.array_equal(adjoint.times, reference.times):
        raise ContractError("Adjoint and reference time grids differ")

    times = reference.times
    spk = reference.steps_per_segment
    integrator = integrator_for(problem.kind, times)
    schedule = PathSchedule(grid, path, times, spk)
    sweep = adjoint.sweep()
    rows = grid.layer1_indices()
    east = grid.east_of_layer1_indices()
    u = reference.positions

    per_step = np.empty((reference.steps, grid.n_layer1))
    for n in range(reference.steps):
        d_centre, d_east = derivative_coefficients(schedule.lambdas(n), grid.h)
        a, b = integrator.pairing_vectors(sweep, n)
        left = d_centre * u[n, rows] + d_east * u[n, east]
        right = d_centre * u[n + 1, rows] + d_east * u[n + 1, east]
        per_step[n] = -0.5 * integrator.dt * (left * a[rows] + right * b[rows])

    weights = basis_weights(problem, times, spk)
    return (per_step.T @ weights).reshape(-1)


def transpose_matrix(problem: ControlProblem) -> np.ndarray:
    """
    Gᵀ assembled from one backward solve per unit terminal vector.

    Returns:
        Array of shape ((N - 1)·K, state_dim)
    """
    reference = problem.reference()
    identity = np.eye(problem.state_dim)
    return np.column_stack(
        [control_map_transpose(e, problem, reference=reference) for e in identity]
    )


def duality_check(
    problem: ControlProblem,
    pairs: int = DEFAULT_DUALITY_PAIRS,
    seed: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> DualityReport:
    """
    ⟨v(T), c⟩ against the time-integrated pairing of −A'(0)[ψ]u₀ with the adjoint.

    Both sides are computed independently on random (c, ψ) pairs: the left
    from a forward linearized solve, the right from a backward solve.
    """
    rng = np.random.default_rng(seed)
    tolerance = tolerance if tolerance is not None else DUALITY_TOLERANCE[problem.kind]
    reference = problem.reference()
    integrator = integrator_for(problem.kind, reference.times)
    results: List[DualityPair] = []
    for _ in range(pairs):
        c = rng.standard_normal(problem.state_dim)
        direction = problem.path_from_vector(rng.standard_normal(problem.n_params))
        lhs = float(gateaux(None, direction, reference, problem.grid).final_state @ c)
        adjoint = solve_adjoint(problem, c)
        forcing = linearized_forcing(reference, None, direction, reference.steps // problem.K)
        rhs = integrator.pairing(adjoint.sweep(), forcing)
        scale = max(abs(lhs), abs(rhs))
        error = abs(lhs - rhs) / scale if scale > 0 else 0.0
        results.append(DualityPair(lhs=lhs, rhs=rhs, relative_error=error))
    max_error = max((r.relative_error for r in results), default=0.0)
    if max_error > tolerance:
        logger.warning(f"Duality identity off by {max_error:.3g} (tolerance {tolerance:.1g})")
    return DualityReport(
        kind=problem.kind.value,
        pairs=results,
        max_relative_error=max_error,
        tolerance=tolerance,
        passed=max_error <= tolerance,
    )


# ============================================================================
# Non-degeneracy
# ============================================================================


def _side_brackets(u: np.ndarray, grid: GridSpec) -> List[Tuple[str, np.ndarray]]:
    """½(second layer) − 2(first layer) on each side, arrays (n_times, side length)."""
    cols = u.reshape(u.shape[0], grid.M - 1, grid.N - 1)
    sides = [("west", 0.5 * cols[:, 1, :] - 2.0 * cols[:, 0, :])]
    sides.append(("east", 0.5 * cols[:, -2, :] - 2.0 * cols[:, -1, :]))
    sides.append(("south", 0.5 * cols[:, :, 1] - 2.0 * cols[:, :, 0]))
    sides.append(("north", 0.5 * cols[:, :, -2] - 2.0 * cols[:, :, -1]))
    return sides


def check_ndd(
    ref_traj: StateTrajectory,
    threshold: Optional[float] = None,
    t_window: Optional[Tuple[float, float]] = None,
    scope: str = "moving_edge",
) -> NDDReport:
    """
    Scan |½u_(2,j)(t) − 2u_(1,j)(t)| over a time window.

    Args:
        ref_traj: Heat or wave reference (the position component is used)
        threshold: Verdict threshold; default 1e-8·max|u| over the window
        t_window: (t_lo, t_hi); default (0.05·T, T)
        scope: "moving_edge" scans layer 1 only, "full_boundary" the first
            layer along all four sides

    Raises:
        DomainError: If the window holds no stored time
        ContractError: If the scope is unknown
    """
    if scope not in ("moving_edge", "full_boundary"):
        raise ContractError(f"Unknown NDD scope {scope!r}")
    grid = ref_traj.grid
    T = ref_traj.T
    t_lo, t_hi = t_window if t_window is not None else (NDD_WINDOW_FRACTION * T, T)
    mask = (ref_traj.times >= t_lo) & (ref_traj.times <= t_hi)
    if t_lo > t_hi or not np.any(mask):
        raise DomainError(f"NDD window [{t_lo}, {t_hi}] contains no time sample")

    u = ref_traj.positions[mask]
    times = ref_traj.times[mask]
    if threshold is None:
        threshold = NDD_RELATIVE_THRESHOLD * float(np.max(np.abs(u)))

    if scope == "moving_edge":
        sides = [("west", layer1_bracket(u, grid))]
    else:
        sides = _side_brackets(u, grid)

    best = (np.inf, None, None, None)
    for side, values in sides:
        magnitude = np.abs(values)
        t_index, node = np.unravel_index(int(np.argmin(magnitude)), magnitude.shape)
        if magnitude[t_index, node] < best[0]:
            best = (float(magnitude[t_index, node]), float(times[t_index]), int(node) + 1, side)

    min_abs, argmin_t, argmin_j, argmin_side = best
    verdict = "satisfied" if min_abs > threshold else "violated"
    if verdict == "violated":
        logger.warning(
            f"Non-degeneracy violated: min |bracket| = {min_abs:.3g} at t={argmin_t}, "
            f"{argmin_side} node {argmin_j} (threshold {threshold:.3g})"
        )
    return NDDReport(
        min_abs=min_abs,
        argmin_t=argmin_t,
        argmin_j=argmin_j,
        argmin_side=argmin_side,
        threshold=threshold,
        t_lo=float(t_lo),
        t_hi=float(t_hi),
        scope=scope,
        samples=int(mask.sum()),
        verdict=verdict,
    )


# ============================================================================
# Layer-1 pairing and zero propagation
# ============================================================================


@dataclass
class Layer1Pairing:
    """
    Time functions g_j(t) = (1/h²)(½u_(2,j) − 2u_(1,j))·X_(1,j)(t).

    Attributes:
        times: Shared time grid
        values: g, shape (n_times, N - 1)
        bracket: ½u_(2,j) − 2u_(1,j), shape (n_times, N - 1)
        h: Mesh step
    """

    times: np.ndarray
    values: np.ndarray
    bracket: np.ndarray
    h: float

    def sup(self) -> float:
        """max_j sup_t |g_j(t)|."""
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def recover_layer1(self, ndd: NDDReport) -> np.ndarray:
        """
        X on layer 1 by division by the bracket, on the NDD window.

        Returns:
            Array (n_window, N - 1)

        Raises:
            ContractError: If the report's verdict is "violated"
        """
        if not ndd.satisfied:
            raise ContractError("Layer-1 recovery needs the non-degeneracy condition")
        mask = (self.times >= ndd.t_lo) & (self.times <= ndd.t_hi)
        return self.h**2 * self.values[mask] / self.bracket[mask]


def layer1_pairing(X: AdjointTrajectory, ref_traj: StateTrajectory, grid: GridSpec) -> Layer1Pairing:
    """
    Pairing integrands of the adjoint with A'(0)[V_j]u₀.

    Raises:
        ContractError: If the time grids differ
    """
    if not np.array_equal(X.times, ref_traj.times):
        raise ContractError("Adjoint and reference trajectories are on different time grids")
    if X.grid != grid or ref_traj.grid != grid:
        raise ContractError("Adjoint, reference and grid disagree")
    bracket = layer1_bracket(ref_traj.positions, grid)
    layer1 = X.observed[:, grid.layer1_indices()]
    return Layer1Pairing(
        times=X.times.copy(), values=bracket * layer1 / grid.h**2, bracket=bracket, h=grid.h
    )


# Fourth-order weights in units of dt**order: centred, then the one-sided
# closures at the first and second sample (mirrored at the far end).
_CENTRED_WEIGHTS = {
    1: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
    2: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
}
_EDGE_WEIGHTS = {
    1: (
        np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
        np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
    ),
    2: (
        np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
        np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0,
    ),
}


def _minimum_samples(order: int) -> int:
    """Samples needed so that the halved series still fits the edge closures."""
    return 2 * _EDGE_WEIGHTS[order][0].size - 1


def _time_derivative(values: np.ndarray, dt: float, order: int) -> np.ndarray:
    """Fourth-order differences along axis 0, one-sided at both ends."""
    n = values.shape[0]
    centred = _CENTRED_WEIGHTS[order]
    first, second = _EDGE_WEIGHTS[order]
    width = first.size
    out = np.zeros_like(values)
    for k, weight in enumerate(centred):
        if weight:
            out[2:-2] += weight * values[k : n - 4 + k]
    reversed_values = values[::-1]
    mirror = -1.0 if order == 1 else 1.0
    out[0] = np.tensordot(first, values[:width], axes=1)
    out[1] = np.tensordot(second, values[:width], axes=1)
    out[-1] = mirror * np.tensordot(first, reversed_values[:width], axes=1)
    out[-2] = mirror * np.tensordot(second, reversed_values[:width], axes=1)
    return out / dt**order


def _resolution_change(values: np.ndarray, dt: float, order: int) -> float:
    """Relative change of the derivative when every other sample is dropped."""
    fine = _time_derivative(values, dt, order)[::2]
    coarse = _time_derivative(values[::2], 2.0 * dt, order)
    scale = float(np.linalg.norm(fine))
    if scale == 0.0:
        return 0.0 if not np.any(coarse) else np.inf
    return float(np.linalg.norm(fine - coarse)) / scale


def propagate_zeros(
    X_col0: np.ndarray,
    X_col1: np.ndarray,
    times: np.ndarray,
    grid: GridSpec,
    kind: EquationKind = EquationKind.HEAT,
    orientation: str = "adjoint",
    check_resolution: bool = True,
) -> np.ndarray:
    """
    Rebuild every column of an adjoint from its first two columns.

    Column k + 1 follows from the stencil at column k:

        heat  X_(k+1,j) = 4X_(k,j) − X_(k−1,j) − X_(k,j+1) − X_(k,j−1) ∓ h²∂_tX_(k,j)
        wave  X_(k+1,j) = 4X_(k,j) − X_(k−1,j) − X_(k,j+1) − X_(k,j−1) + h²∂²_tX_(k,j)

    The heat sign is "−" for ``orientation="adjoint"`` (∂_t X = AX, the
    backward solves of this module) and "+" for ``"forward"`` (∂_t X = −AX).
    Rows j = 0 and j = N are zero.
    Time derivatives use fourth-order differences, so at least 9 samples
    (heat) or 11 (wave) are required.

    Args:
        X_col0: Column i = 0 at rows 1..N-1, shape (n_times, N - 1)
        X_col1: Column i = 1 at rows 1..N-1, shape (n_times, N - 1)
        times: Uniform sample times
        grid: Grid specification
        kind: Heat (first time derivative) or wave (second)
        orientation: "adjoint" or "forward" (heat only)
        check_resolution: Reject time series whose derivative changes by more
            than 10% when every other sample is dropped

    Returns:
        Array (n_times, M + 1, N + 1) of every column; column M is the
        reconstruction's own prediction of the boundary

    Raises:
        ResolutionError: If the time grid is too coarse for the derivative rule
        ContractError: On shape mismatches or an unknown orientation
    """
    kind = EquationKind(kind)
    if orientation not in ("adjoint", "forward"):
        raise ContractError(f"Unknown orientation {orientation!r}")
    times = np.asarray(times, dtype=float)
    col0 = np.asarray(X_col0, dtype=float)
    col1 = np.asarray(X_col1, dtype=float)
    shape = (times.size, grid.n_layer1)
    if col0.shape != shape or col1.shape != shape:
        raise ContractError(f"Input columns must have shape {shape}, got {col0.shape} and {col1.shape}")
    order = 1 if kind is EquationKind.HEAT else 2
    minimum = _minimum_samples(order)
    if times.size < minimum:
        raise ResolutionError(
            f"Zero propagation needs at least {minimum} time samples, got {times.size}",
            relative_change=np.inf,
        )
    dt = float(times[-1] - times[0]) / (times.size - 1)
    if check_resolution:
        for column in (col0, col1):
            change = _resolution_change(column, dt, order)
            if change > RESOLUTION_MAX_CHANGE:
                raise ResolutionError(
                    f"Time grid too coarse: derivative changes by {change:.3g} under halving "
                    f"(limit {RESOLUTION_MAX_CHANGE})",
                    relative_change=change,
                )

    if kind is EquationKind.HEAT:
        sign = -1.0 if orientation == "adjoint" else 1.0
    else:
        sign = 1.0
    h2 = grid.h**2
    out = np.zeros((times.size, grid.M + 1, grid.N + 1))
    out[:, 0, 1:-1] = col0
    out[:, 1, 1:-1] = col1
    for k in range(1, grid.M):
        current = out[:, k, :]
        derivative = _time_derivative(current[:, 1:-1], dt, order)
        out[:, k + 1, 1:-1] = (
            4.0 * current[:, 1:-1]
            - out[:, k - 1, 1:-1]
            - current[:, 2:]
            - current[:, :-2]
            + sign * h2 * derivative
        )
    return out


def reconstruct_adjoint(
    X: AdjointTrajectory,
    layer1: Optional[np.ndarray] = None,
    check_resolution: bool = True,
    window: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Interior adjoint trajectory rebuilt from its boundary and layer-1 columns.

    Args:
        X: Adjoint whose observed component is reconstructed
        layer1: Replacement layer-1 values (n_window, N - 1); X's own if None
        check_resolution: Passed to propagate_zeros
        window: Boolean mask over X.times selecting the rows of ``layer1``;
            every time if None

    Returns:
        Array (n_window, n_interior) in interior-vector order

    Raises:
        ContractError: If layer1 does not match the window
    """
    grid = X.grid
    mask = np.ones(X.times.size, dtype=bool) if window is None else np.asarray(window, dtype=bool)
    if mask.shape != X.times.shape:
        raise ContractError(f"Window mask has shape {mask.shape}, expected {X.times.shape}")
    times = X.times[mask]
    col1 = X.observed[mask][:, grid.layer1_indices()] if layer1 is None else np.asarray(layer1)
    if col1.shape != (times.size, grid.n_layer1):
        raise ContractError(
            f"Layer-1 values have shape {col1.shape}, expected {(times.size, grid.n_layer1)}"
        )
    columns = propagate_zeros(
        np.zeros((times.size, grid.n_layer1)),
        col1,
        times,
        grid,
        kind=X.kind,
        check_resolution=check_resolution,
    )
    return columns[:, 1:-1, 1:-1].reshape(times.size, -1)


def unique_continuation_check(
    problem: ControlProblem,
    trials: int = DEFAULT_UC_TRIALS,
    seed: Optional[int] = None,
    tolerance: float = UC_RESIDUAL_TOLERANCE,
    ndd: Optional[NDDReport] = None,
    reconstruction_tolerance: float = UC_RECONSTRUCTION_TOLERANCE,
) -> UniqueContinuationReport:
    """
    Run the layer-1 pairing → zero-propagation chain on random terminal vectors.

    For each random unit c:
      - the converse ratio ‖Gᵀc‖/‖c‖ is measured column-free;
      - layer-1 values recovered by dividing the pairing by the bracket are
        compared with the solved adjoint;
      - those recovered values are propagated across the grid and the rebuilt
        terminal trace is compared with c, ‖X_rebuilt(T) − c‖/‖c‖ on the
        observed component;
      - the adjoint rebuilt from its own layer-1 column is compared with the
        solved adjoint over the whole horizon.

    The chain is linear and maps vanishing pairings to a vanishing trace, so
    the residual measures how faithfully it returns c from nonzero pairings.

    The verdict is "unique" when NDD holds, every residual is at most
    ``reconstruction_tolerance`` and the smallest converse ratio exceeds
    ``tolerance`` times the largest. A c with ratio below that bound is
    reported with ‖c‖ and ‖Gᵀc‖; with fewer path parameters than trace
    entries one always exists and is taken from the kernel of Gᵀ.
    """
    reference = problem.reference()
    grid = problem.grid
    n = grid.n_interior
    if ndd is None:
        ndd = check_ndd(reference)
    rng = np.random.default_rng(seed)

    candidates: List[np.ndarray] = []
    ratios: List[float] = []
    residuals: List[float] = []
    layer1_errors: List[float] = []
    propagation_errors: List[float] = []
    for trial in range(trials):
        c = rng.standard_normal(problem.state_dim)
        c /= np.linalg.norm(c)
        adjoint = solve_adjoint(problem, c)
        pairing = layer1_pairing(adjoint, reference, grid)
        pairing_c = control_map_transpose(c, problem, reference=reference, adjoint=adjoint)
        candidates.append(c)
        ratios.append(float(np.linalg.norm(pairing_c)))

        if ndd.satisfied:
            recovered = pairing.recover_layer1(ndd)
            mask = (adjoint.times >= ndd.t_lo) & (adjoint.times <= ndd.t_hi)
            truth = adjoint.observed[mask][:, grid.layer1_indices()]
            scale = max(float(np.max(np.abs(truth))), np.finfo(float).tiny)
            layer1_errors.append(float(np.max(np.abs(recovered - truth))) / scale)

            try:
                rebuilt = reconstruct_adjoint(
                    adjoint, layer1=recovered, check_resolution=False, window=mask
                )
            except ResolutionError as e:
                logger.warning(f"Trial {trial}: terminal reconstruction skipped ({e})")
            else:
                target = adjoint.terminal_data[-n:]
                residuals.append(
                    float(np.linalg.norm(rebuilt[-1] - target) / np.linalg.norm(target))
                )

        try:
            rebuilt = reconstruct_adjoint(adjoint)
        except ResolutionError as e:
            logger.warning(f"Trial {trial}: reconstruction skipped ({e})")
        else:
            truth = adjoint.observed
            scale = max(float(np.max(np.abs(truth))), np.finfo(float).tiny)
            propagation_errors.append(float(np.max(np.abs(rebuilt - truth))) / scale)

    if problem.n_params < problem.state_dim:
        # Fewer path parameters than trace entries: Gᵀ has a nontrivial kernel.
        _, _, vt = linalg.svd(transpose_matrix(problem))
        c = vt[-1]
        candidates.append(c)
        ratios.append(float(np.linalg.norm(control_map_transpose(c, problem, reference=reference))))

    max_ratio = max(ratios, default=0.0)
    min_ratio = min(ratios, default=0.0)
    annihilating: Optional[np.ndarray] = None
    if ratios and min_ratio <= tolerance * max_ratio:
        annihilating = candidates[int(np.argmin(ratios))]
        logger.info(
            f"Found a nonzero terminal vector with vanishing layer-1 pairings "
            f"(‖Gᵀc‖ = {min_ratio:.3g})"
        )

    max_residual = max(residuals) if residuals else None
    annihilating_norm = float(np.linalg.norm(annihilating)) if annihilating is not None else None
    unique = (
        ndd.satisfied
        and max_residual is not None
        and max_residual <= reconstruction_tolerance
        and trials > 0
        and min_ratio > tolerance * max_ratio
    )
    return UniqueContinuationReport(
        trials=trials,
        max_residual_c=max_residual,
        min_converse_ratio=min_ratio,
        max_layer1_recovery_error=max(layer1_errors) if layer1_errors else None,
        max_propagation_error=max(propagation_errors) if propagation_errors else None,
        annihilating_c=annihilating.tolist() if annihilating is not None else None,
        annihilating_c_norm=annihilating_norm,
        annihilating_pairing_norm=min_ratio if annihilating is not None else None,
        tolerance=tolerance,
        reconstruction_tolerance=reconstruction_tolerance,
        verdict="unique" if unique else "non_unique",
    )
