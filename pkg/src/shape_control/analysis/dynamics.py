"""
Time integration of the reference and perturbed semi-discrete equations.

Heat:  u' + A(φ(t))u = F,   u(0) = u0             (Crank-Nicolson)
Wave:  u'' + A(φ(t))u = F,  u(0) = u0, u'(0) = u1  (Störmer-Verlet)

Time steps are aligned with the K segments of the deformation path: every
segment holds ``ceil(steps / K)`` steps, so no step straddles a jump of a
piecewise-constant path.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Hashable, Optional, Tuple, Union

import numpy as np
import pandas as pd

from shape_control.constants import CFL_SAFETY, POWER_ITERATIONS
from shape_control.discretization.base import (
    ConfigurationError,
    ContractError,
    DomainError,
    EquationKind,
)
from shape_control.discretization.expressions import Expression
from shape_control.discretization.grid import GridSpec
from shape_control.discretization.operators import (
    DeformationPath,
    assemble_matrix,
    laplacian_matrix,
    perturbed_matrix,
)
from shape_control.integrators.base import OperatorSchedule, StepForcing
from shape_control.integrators.crank_nicolson import CrankNicolsonIntegrator
from shape_control.integrators.stormer_verlet import StormerVerletIntegrator

logger = logging.getLogger(__name__)


# ============================================================================
# Time grid and operator schedule
# ============================================================================


def time_grid(T: float, K: int, steps: int) -> Tuple[np.ndarray, int]:
    """
    Uniform time grid aligned with K segments.

    Args:
        T: Horizon
        K: Number of path segments
        steps: Requested number of steps

    Returns:
        Tuple of (times with K·ceil(steps/K) + 1 points, steps per segment)

    Raises:
        DomainError: If T, K or steps is not positive
    """
    if not T > 0:
        raise DomainError(f"Horizon T must be positive, got {T}")
    if int(steps) != steps or steps < 1:
        raise DomainError(f"steps must be a positive integer, got {steps}")
    if int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K}")
    steps_per_segment = math.ceil(int(steps) / int(K))
    times = np.linspace(0.0, T, int(K) * steps_per_segment + 1)
    return times, steps_per_segment


def step_values(path: DeformationPath, n: int, times: np.ndarray, steps_per_segment: int) -> np.ndarray:
    """
    λ (or ψ) frozen on step n: the segment value for heat paths, the value at
    the step midpoint for wave paths.
    """
    if path.kind is EquationKind.HEAT:
        return path.coeffs[:, n // steps_per_segment]
    return path.lambdas_at(0.5 * (times[n] + times[n + 1]))


class PathSchedule(OperatorSchedule):
    """
    A(φ) frozen on each step of a segment-aligned time grid.

    Args:
        grid: Grid specification
        path: Deformation path, or None for the unperturbed operator
        times: Time grid from ``time_grid``
        steps_per_segment: Steps per path segment
    """

    def __init__(
        self,
        grid: GridSpec,
        path: Optional[DeformationPath],
        times: np.ndarray,
        steps_per_segment: int,
    ):
        self.grid = grid
        self.path = path
        self.times = times
        self.steps_per_segment = steps_per_segment

    def key(self, n: int) -> Hashable:
        if self.path is None:
            return 0
        if self.path.kind is EquationKind.HEAT:
            return n // self.steps_per_segment
        return n

    def lambdas(self, n: int) -> np.ndarray:
        if self.path is None:
            return np.zeros(self.grid.n_layer1)
        return step_values(self.path, n, self.times, self.steps_per_segment)

    def matrix(self, n: int) -> np.ndarray:
        if self.path is None:
            return laplacian_matrix(self.grid)
        return perturbed_matrix(self.lambdas(n), self.grid)


# ============================================================================
# Source terms
# ============================================================================


class SourceTerm(ABC):
    """Source F(t, m) on the interior nodes."""

    @abstractmethod
    def evaluate(self, t: float, grid: GridSpec) -> np.ndarray:
        """Interior vector F(t, ·)."""
        pass

    @property
    def is_zero(self) -> bool:
        return False

    def sample(self, times: np.ndarray, grid: GridSpec) -> np.ndarray:
        """
        F at every time of the grid, shape (len(times), n_interior).

        Raises:
            ConfigurationError: If a sample is not finite
        """
        samples = np.vstack([self.evaluate(float(t), grid) for t in times])
        if not np.all(np.isfinite(samples)):
            raise ConfigurationError(f"Source {self!r} is not finite on [0, {times[-1]}]")
        return samples

    def to_dict(self) -> Dict[str, Any]:
        """JSON description used in run summaries."""
        return {"type": type(self).__name__}


class ConstantSource(SourceTerm):
    """F ≡ value on every interior node."""

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def evaluate(self, t: float, grid: GridSpec) -> np.ndarray:
        return np.full(grid.n_interior, self.value)

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "constant", "value": self.value}

    def __repr__(self) -> str:
        return f"ConstantSource({self.value!r})"


TimeFactor = Union[float, Expression, Callable[[float], float]]
SpaceFactor = Union[float, Expression, Callable[[np.ndarray, np.ndarray], np.ndarray]]


class SeparableSource(SourceTerm):
    """
    F(t, x, y) = g(t)·s(x, y), sampled at the nodes (F_m = f(m)).

    Args:
        time_factor: g as a constant, an Expression in t, or a callable
        space_factor: s as a constant, an Expression in x and y, or a callable
    """

    def __init__(self, time_factor: TimeFactor = 1.0, space_factor: SpaceFactor = 1.0):
        self.time_factor = time_factor
        self.space_factor = space_factor
        self._space_cache: Dict[GridSpec, np.ndarray] = {}

    def _space(self, grid: GridSpec) -> np.ndarray:
        if grid not in self._space_cache:
            x, y = grid.interior_coordinates()
            if isinstance(self.space_factor, Expression):
                values = self.space_factor.evaluate(x=x, y=y)
            elif callable(self.space_factor):
                values = self.space_factor(x, y)
            else:
                values = float(self.space_factor)
            self._space_cache[grid] = np.broadcast_to(
                np.asarray(values, dtype=float), (grid.n_interior,)
            ).copy()
        return self._space_cache[grid]

    def _time(self, t: float) -> float:
        if isinstance(self.time_factor, Expression):
            return float(self.time_factor.evaluate(t=t))
        if callable(self.time_factor):
            return float(self.time_factor(t))
        return float(self.time_factor)

    def evaluate(self, t: float, grid: GridSpec) -> np.ndarray:
        return self._time(t) * self._space(grid)

    def to_dict(self) -> Dict[str, Any]:
        def describe(factor: Any) -> Any:
            if isinstance(factor, Expression):
                return factor.source
            if callable(factor):
                return getattr(factor, "__name__", "callable")
            return float(factor)

        return {
            "type": "separable",
            "time": describe(self.time_factor),
            "space": describe(self.space_factor),
        }

    def __repr__(self) -> str:
        return f"SeparableSource({self.time_factor!r}, {self.space_factor!r})"


class ExpressionSource(SourceTerm):
    """F(t, x, y) given by one closed-form expression."""

    def __init__(self, expression: Union[str, Expression]):
        if isinstance(expression, str):
            expression = Expression(expression)
        self.expression = expression

    def evaluate(self, t: float, grid: GridSpec) -> np.ndarray:
        x, y = grid.interior_coordinates()
        values = self.expression.evaluate(x=x, y=y, t=t)
        return np.broadcast_to(values, (grid.n_interior,)).copy()

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "expression", "expr": self.expression.source}

    def __repr__(self) -> str:
        return f"ExpressionSource({self.expression.source!r})"


class TabulatedSource(SourceTerm):
    """
    Samples of F at given times, linearly interpolated in between.

    Args:
        times: Increasing sample times covering the integration horizon
        values: Array of shape (len(times), n_interior)
    """

    def __init__(self, times: np.ndarray, values: np.ndarray):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.times.ndim != 1 or self.times.size < 1:
            raise ConfigurationError("Tabulated source needs at least one sample time")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ConfigurationError("Tabulated source times must be strictly increasing")
        if self.values.ndim != 2 or self.values.shape[0] != self.times.size:
            raise ConfigurationError(
                f"Tabulated source values have shape {self.values.shape}, "
                f"expected ({self.times.size}, n_interior)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("Tabulated source has non-finite samples")

    def evaluate(self, t: float, grid: GridSpec) -> np.ndarray:
        if self.values.shape[1] != grid.n_interior:
            raise ContractError(
                f"Tabulated source has {self.values.shape[1]} nodes, grid has {grid.n_interior}"
            )
        if self.times.size == 1:
            return self.values[0].copy()
        span = self.times[-1] - self.times[0]
        slack = 1e-12 * max(span, 1.0)
        if t < self.times[0] - slack or t > self.times[-1] + slack:
            raise DomainError(
                f"Time {t} outside tabulated range [{self.times[0]}, {self.times[-1]}]"
            )
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2))
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        w = min(max(w, 0.0), 1.0)
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "tabulated", "samples": int(self.times.size)}


# ============================================================================
# Trajectories
# ============================================================================


@dataclass
class StateTrajectory:
    """
    States of a semi-discrete solve on its time grid.

    Attributes:
        grid: Grid specification
        times: Increasing times t_0 = 0 ... t_S = T
        states: Array (S + 1, dim); dim = n for heat, 2n ([u, v]) for wave
        kind: Heat or wave
        steps_per_segment: Steps per path segment of the time grid
        path: Deformation path the states were computed with, None for φ ≡ 0
    """

    grid: GridSpec
    times: np.ndarray
    states: np.ndarray
    kind: EquationKind
    steps_per_segment: int = 1
    path: Optional[DeformationPath] = None

    def __post_init__(self) -> None:
        self.kind = EquationKind(self.kind)
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or not np.all(np.diff(self.times) > 0):
            raise ContractError("Trajectory times must be strictly increasing")
        if self.states.ndim != 2 or self.states.shape[0] != self.times.size:
            raise ContractError(
                f"States shape {self.states.shape} does not match {self.times.size} times"
            )
        expected = self.grid.n_interior * (2 if self.kind is EquationKind.WAVE else 1)
        if self.states.shape[1] != expected:
            raise ContractError(
                f"{self.kind.value} states must have dimension {expected}, got {self.states.shape[1]}"
            )

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def positions(self) -> np.ndarray:
        """u at every time, shape (S + 1, n)."""
        return self.states[:, : self.grid.n_interior]

    @property
    def velocities(self) -> np.ndarray:
        """
        ∂_t u at every time (wave only).

        Raises:
            ContractError: For heat trajectories
        """
        if self.kind is not EquationKind.WAVE:
            raise ContractError("Heat trajectories carry no velocity")
        return self.states[:, self.grid.n_interior :]

    @property
    def final_state(self) -> np.ndarray:
        """Final trace: u(T) for heat, [u(T), ∂_t u(T)] for wave."""
        return self.states[-1].copy()

    def same_time_grid(self, other: "StateTrajectory") -> bool:
        return self.times.shape == other.times.shape and bool(np.array_equal(self.times, other.times))

    def energy(self) -> np.ndarray:
        """
        Discrete wave energy ½‖v‖² + ½⟨A(φ(t))u, u⟩ at every time.

        Raises:
            ContractError: For heat trajectories
        """
        u = self.positions
        v = self.velocities
        if self.path is None:
            matrix = laplacian_matrix(self.grid)
            potential = np.einsum("ti,ij,tj->t", u, matrix, u)
        else:
            potential = np.array(
                [un @ assemble_matrix(self.path, float(t), self.grid) @ un for t, un in zip(self.times, u)]
            )
        return 0.5 * np.einsum("ti,ti->t", v, v) + 0.5 * potential

    def to_dataframe(self) -> pd.DataFrame:
        """Columns t, u_i_j ... (and v_i_j ... for wave) in interior-vector order."""
        columns = self.grid.column_labels("u")
        if self.kind is EquationKind.WAVE:
            columns = columns + self.grid.column_labels("v")
        df = pd.DataFrame(self.states, columns=columns)
        df.insert(0, "t", self.times)
        return df

    def summary(self) -> Dict[str, Any]:
        """Final state and norms for JSON reports."""
        final_u = self.positions[-1]
        summary: Dict[str, Any] = {
            "kind": self.kind.value,
            "T": self.T,
            "steps": self.steps,
            "steps_per_segment": self.steps_per_segment,
            "final_state": self.final_state.tolist(),
            "final_l2_norm": float(np.linalg.norm(final_u)),
            "final_linf_norm": float(np.max(np.abs(final_u))) if final_u.size else 0.0,
        }
        if self.kind is EquationKind.WAVE:
            energy = self.energy()
            summary["energy_initial"] = float(energy[0])
            summary["energy_final"] = float(energy[-1])
            summary["energy_max_relative_drift"] = (
                float(np.max(np.abs(energy - energy[0])) / energy[0]) if energy[0] > 0 else 0.0
            )
        return summary


# ============================================================================
# Solvers
# ============================================================================


def estimate_lambda_max(matrix: np.ndarray, iterations: int = POWER_ITERATIONS) -> float:
    """
    Power-iteration estimate of the spectral radius of ``matrix``.

    Args:
        matrix: Square matrix
        iterations: Number of matrix-vector products

    Returns:
        ‖A x‖/‖x‖ for the final iterate x
    """
    x = np.random.default_rng(0).standard_normal(matrix.shape[0])
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(iterations):
        y = matrix @ x
        estimate = float(np.linalg.norm(y))
        if estimate == 0.0:
            return 0.0
        x = y / estimate
    return estimate


def _check_path(path: DeformationPath, grid: GridSpec, T: float, kind: EquationKind) -> None:
    if path.grid != grid:
        raise ContractError(f"Deformation path grid {path.grid} does not match {grid}")
    if path.kind is not kind:
        raise ContractError(f"{kind.value} solve given a {path.kind.value} path")
    if not math.isclose(path.T, T, rel_tol=1e-12):
        raise ContractError(f"Path horizon {path.T} differs from solve horizon {T}")
    path.check_admissible()


def _check_initial(vector: Optional[np.ndarray], grid: GridSpec, name: str) -> np.ndarray:
    if vector is None:
        return np.zeros(grid.n_interior)
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (grid.n_interior,):
        raise DomainError(f"{name} has shape {vector.shape}, expected ({grid.n_interior},)")
    return vector


def _source_forcing(F: SourceTerm, times: np.ndarray, grid: GridSpec) -> Optional[StepForcing]:
    if F.is_zero:
        return None
    samples = F.sample(times, grid)
    return lambda n: (samples[n], samples[n + 1])


def solve_heat(
    path: Optional[DeformationPath],
    F: SourceTerm,
    u0: Optional[np.ndarray],
    T: float,
    steps: int,
    grid: GridSpec,
    K: int = 1,
) -> StateTrajectory:
    """
    Solve u' + A(φ(t))u = F, u(0) = u0 on [0, T] by Crank-Nicolson.

    Args:
        path: Heat deformation path, or None for φ ≡ 0
        F: Source term
        u0: Initial interior vector (None for zero)
        T: Horizon
        steps: Requested number of steps (rounded up to a multiple of K)
        grid: Grid specification
        K: Segments of the time grid when path is None

    Returns:
        StateTrajectory with the final time exactly T

    Raises:
        AdmissibilityError: If the path leaves the admissible set
        DivergenceError: If the state becomes non-finite
    """
    if path is not None:
        _check_path(path, grid, T, EquationKind.HEAT)
        K = path.K
    u0 = _check_initial(u0, grid, "u0")
    times, steps_per_segment = time_grid(T, K, steps)
    schedule = PathSchedule(grid, path, times, steps_per_segment)
    integrator = CrankNicolsonIntegrator(times, logger=logger)
    logger.debug(f"Heat solve: T={T}, {times.size - 1} steps, K={K}")
    states = integrator.forward(u0, schedule, _source_forcing(F, times, grid))
    return StateTrajectory(grid, times, states, EquationKind.HEAT, steps_per_segment, path)


def wave_lambda_max(path: Optional[DeformationPath], grid: GridSpec) -> float:
    """Safety-inflated λ_max of A(φ(t)) over segment midpoints and knots."""
    if path is None or path.is_zero():
        return CFL_SAFETY * estimate_lambda_max(np.asarray(laplacian_matrix(grid)))
    sample_times = np.union1d(
        np.linspace(0.0, path.T, path.K + 1),
        (np.arange(path.K) + 0.5) * path.segment_length,
    )
    return CFL_SAFETY * max(
        estimate_lambda_max(assemble_matrix(path, float(t), grid)) for t in sample_times
    )


def solve_wave(
    path: Optional[DeformationPath],
    F: SourceTerm,
    u0: Optional[np.ndarray],
    u1: Optional[np.ndarray],
    T: float,
    steps: int,
    grid: GridSpec,
    K: int = 1,
) -> StateTrajectory:
    """
    Solve u'' + A(φ(t))u = F, u(0) = u0, u'(0) = u1 on [0, T] by Störmer-Verlet.

    Raises:
        CFLViolationError: If dt·√λ_max > 2, before any step is taken
        AdmissibilityError: If the path leaves the wave-admissible set
        DivergenceError: If the state becomes non-finite
    """
    if path is not None:
        _check_path(path, grid, T, EquationKind.WAVE)
        K = path.K
    u0 = _check_initial(u0, grid, "u0")
    u1 = _check_initial(u1, grid, "u1")
    times, steps_per_segment = time_grid(T, K, steps)
    integrator = StormerVerletIntegrator(times, logger=logger)
    integrator.check_stability(wave_lambda_max(path, grid))
    schedule = PathSchedule(grid, path, times, steps_per_segment)
    logger.debug(f"Wave solve: T={T}, {times.size - 1} steps, K={K}")
    states = integrator.forward(np.concatenate([u0, u1]), schedule, _source_forcing(F, times, grid))
    return StateTrajectory(grid, times, states, EquationKind.WAVE, steps_per_segment, path)


def reference_state(
    kind: Union[EquationKind, str],
    F: SourceTerm,
    u0: Optional[np.ndarray],
    T: float,
    steps: int,
    grid: GridSpec,
    u1: Optional[np.ndarray] = None,
    K: int = 1,
) -> StateTrajectory:
    """Unperturbed state (φ ≡ 0) of the heat or wave equation."""
    kind = EquationKind(kind)
    if kind is EquationKind.HEAT:
        return solve_heat(None, F, u0, T, steps, grid, K=K)
    return solve_wave(None, F, u0, u1, T, steps, grid, K=K)


def solve(
    kind: Union[EquationKind, str],
    path: Optional[DeformationPath],
    F: SourceTerm,
    u0: Optional[np.ndarray],
    T: float,
    steps: int,
    grid: GridSpec,
    u1: Optional[np.ndarray] = None,
    K: int = 1,
) -> StateTrajectory:
    """Dispatch to ``solve_heat`` or ``solve_wave``."""
    if EquationKind(kind) is EquationKind.HEAT:
        return solve_heat(path, F, u0, T, steps, grid, K=K)
    return solve_wave(path, F, u0, u1, T, steps, grid, K=K)
