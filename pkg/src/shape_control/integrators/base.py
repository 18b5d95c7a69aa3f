"""Base class for the fixed-step linear integrators."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Hashable, Optional, Tuple

import numpy as np

from shape_control.discretization.base import ContractError, DivergenceError

logger = logging.getLogger(__name__)

StepForcing = Callable[[int], Tuple[np.ndarray, np.ndarray]]
"""Maps a step index n to the forcing samples used at the two ends of the step."""


class OperatorSchedule(ABC):
    """The operator A frozen on each step [t_n, t_n+1]."""

    @abstractmethod
    def key(self, n: int) -> Hashable:
        """Steps with equal keys share the same matrix."""
        pass

    @abstractmethod
    def matrix(self, n: int) -> np.ndarray:
        """Matrix of A on step n."""
        pass


@dataclass
class AdjointSweep:
    """
    States of a backward sweep.

    Attributes:
        states: Adjoint values at every stored time, shape (S + 1, dim)
        stages: Per-step vectors the forcing of step n pairs with, or None
    """

    states: np.ndarray
    stages: Optional[np.ndarray] = None


class BaseIntegrator(ABC):
    """
    Fixed-step integrator of a linear system forced on the interior nodes.

    The time grid is uniform. Each step freezes the operator given by an
    OperatorSchedule, so the same integrator serves the reference, the
    perturbed and the linearized equations, and its exact transpose.

    Args:
        times: Uniform time grid t_0 = 0 < ... < t_S = T
        logger: Optional logger instance
    """

    def __init__(self, times: np.ndarray, logger: Optional[logging.Logger] = None):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ContractError("Time grid needs at least two points")
        if not np.all(np.diff(times) > 0):
            raise ContractError("Time grid must be strictly increasing")
        self.times = times
        self.dt = float(times[-1] - times[0]) / (times.size - 1)
        if logger is None:
            self.logger = logging.getLogger(self.__class__.__module__)
        else:
            self.logger = logger
        self._cached_key: Optional[Hashable] = None
        self._cached: Optional[tuple] = None

    @property
    def steps(self) -> int:
        return self.times.size - 1

    def _prepared(self, n: int, schedule: OperatorSchedule) -> tuple:
        """Per-step data from ``_prepare``, rebuilt only when the key changes."""
        key = schedule.key(n)
        if self._cached is None or key != self._cached_key:
            self._cached = self._prepare(schedule.matrix(n))
            self._cached_key = key
        return self._cached

    def _reset_cache(self) -> None:
        self._cached_key = None
        self._cached = None

    @abstractmethod
    def _prepare(self, matrix: np.ndarray) -> tuple:
        pass

    @abstractmethod
    def forward(
        self,
        initial: np.ndarray,
        schedule: OperatorSchedule,
        forcing_for_step: Optional[StepForcing] = None,
    ) -> np.ndarray:
        """
        Integrate forward from ``initial``.

        Returns:
            States at every time, shape (S + 1, dim)

        Raises:
            DivergenceError: If a state becomes non-finite
        """
        pass

    @abstractmethod
    def backward(self, terminal: np.ndarray, schedule: OperatorSchedule) -> AdjointSweep:
        """Exact transpose of ``forward`` applied to the terminal vector."""
        pass

    @abstractmethod
    def pairing_vectors(self, sweep: AdjointSweep, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Adjoint vectors paired with the left and right forcing samples of step n.

        With these, Σ_n dt/2·(⟨f_L, a⟩ + ⟨f_R, b⟩) equals the terminal pairing
        of the forced forward solution.
        """
        pass

    def pairing(self, sweep: AdjointSweep, forcing_for_step: StepForcing) -> float:
        """Σ_n dt/2·(⟨f_L(n), a_n⟩ + ⟨f_R(n), b_n⟩) over every step."""
        total = 0.0
        for n in range(self.steps):
            f_left, f_right = forcing_for_step(n)
            a, b = self.pairing_vectors(sweep, n)
            total += 0.5 * self.dt * (float(f_left @ a) + float(f_right @ b))
        return total

    def _check_finite(self, state: np.ndarray, step: int) -> None:
        if not np.all(np.isfinite(state)):
            raise DivergenceError(f"Non-finite state at step {step}", step=step)
