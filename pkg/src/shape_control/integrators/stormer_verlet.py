"""Störmer-Verlet integrator for u'' + A(t)u = f in first-order form."""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from shape_control.discretization.base import CFLViolationError
from shape_control.integrators.base import (
    AdjointSweep,
    BaseIntegrator,
    OperatorSchedule,
    StepForcing,
)

logger = logging.getLogger(__name__)


class StormerVerletIntegrator(BaseIntegrator):
    """
    Velocity Verlet with A frozen at the step midpoint.

    States are stacked as [u, v]. Step n:

        w       = v_n + dt/2·(f_L − A_n u_n)
        u_{n+1} = u_n + dt·w
        v_{n+1} = w + dt/2·(f_R − A_n u_{n+1})

    Forcing acts on the velocity equation only.
    """

    def _prepare(self, matrix: np.ndarray) -> tuple:
        return (matrix,)

    def stability_limit(self, lambda_max: float) -> float:
        """Largest stable step 2/√λ_max."""
        return math.inf if lambda_max <= 0 else 2.0 / math.sqrt(lambda_max)

    def check_stability(self, lambda_max: float) -> None:
        """
        Raises:
            CFLViolationError: If dt·√λ_max > 2
        """
        dt_max = self.stability_limit(lambda_max)
        if self.dt > dt_max:
            raise CFLViolationError(
                f"Time step {self.dt:.6g} exceeds the Verlet stability limit {dt_max:.6g} "
                f"(λ_max ≈ {lambda_max:.6g}); increase steps to at least "
                f"{math.ceil((self.times[-1] - self.times[0]) / dt_max)}",
                dt=self.dt,
                dt_max=dt_max,
            )

    def forward(
        self,
        initial: np.ndarray,
        schedule: OperatorSchedule,
        forcing_for_step: Optional[StepForcing] = None,
    ) -> np.ndarray:
        self._reset_cache()
        initial = np.array(initial, dtype=float)
        dim = initial.size // 2
        u, v = initial[:dim].copy(), initial[dim:].copy()
        states = np.empty((self.steps + 1, 2 * dim))
        states[0] = initial
        half = 0.5 * self.dt
        for n in range(self.steps):
            (matrix,) = self._prepared(n, schedule)
            if forcing_for_step is not None:
                f_left, f_right = forcing_for_step(n)
            else:
                f_left = f_right = 0.0
            w = v + half * (f_left - matrix @ u)
            u = u + self.dt * w
            v = w + half * (f_right - matrix @ u)
            states[n + 1, :dim] = u
            states[n + 1, dim:] = v
            self._check_finite(states[n + 1], n + 1)
        return states

    def backward(self, terminal: np.ndarray, schedule: OperatorSchedule) -> AdjointSweep:
        """
        Transpose sweep on [p, q] from (p_S, q_S) = (c_u, c_v):

            p̃   = p_{n+1} − dt/2·A_nᵀ q_{n+1}
            q_n = q_{n+1} + dt·p̃
            p_n = p̃ − dt/2·A_nᵀ q_n
        """
        self._reset_cache()
        terminal = np.array(terminal, dtype=float)
        dim = terminal.size // 2
        p, q = terminal[:dim].copy(), terminal[dim:].copy()
        states = np.empty((self.steps + 1, 2 * dim))
        states[-1] = terminal
        half = 0.5 * self.dt
        for n in reversed(range(self.steps)):
            (matrix,) = self._prepared(n, schedule)
            p_tilde = p - half * (matrix.T @ q)
            q = q + self.dt * p_tilde
            p = p_tilde - half * (matrix.T @ q)
            states[n, :dim] = p
            states[n, dim:] = q
            self._check_finite(states[n], n)
        return AdjointSweep(states=states)

    def pairing_vectors(self, sweep: AdjointSweep, n: int) -> Tuple[np.ndarray, np.ndarray]:
        dim = sweep.states.shape[1] // 2
        return sweep.states[n, dim:], sweep.states[n + 1, dim:]
