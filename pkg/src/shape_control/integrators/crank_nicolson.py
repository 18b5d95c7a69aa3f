"""Crank-Nicolson integrator for u' + A(t)u = f."""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from shape_control.integrators.base import (
    AdjointSweep,
    BaseIntegrator,
    OperatorSchedule,
    StepForcing,
)

logger = logging.getLogger(__name__)


class CrankNicolsonIntegrator(BaseIntegrator):
    """
    Trapezoidal rule with A frozen at the step midpoint.

    Step n solves (I + dt/2·A_n)u_{n+1} = (I − dt/2·A_n)u_n + dt/2·(f_L + f_R).
    The LU factorisation of I + dt/2·A_n is reused while the schedule key is
    unchanged, i.e. across a whole segment of a piecewise-constant path.
    """

    def _prepare(self, matrix: np.ndarray) -> tuple:
        identity = np.eye(matrix.shape[0])
        half = 0.5 * self.dt * matrix
        factor = linalg.lu_factor(identity + half, check_finite=False)
        return factor, identity - half

    def forward(
        self,
        initial: np.ndarray,
        schedule: OperatorSchedule,
        forcing_for_step: Optional[StepForcing] = None,
    ) -> np.ndarray:
        self._reset_cache()
        u = np.array(initial, dtype=float)
        states = np.empty((self.steps + 1, u.size))
        states[0] = u
        for n in range(self.steps):
            factor, explicit = self._prepared(n, schedule)
            rhs = explicit @ u
            if forcing_for_step is not None:
                f_left, f_right = forcing_for_step(n)
                rhs += 0.5 * self.dt * (f_left + f_right)
            u = linalg.lu_solve(factor, rhs, check_finite=False)
            self._check_finite(u, n + 1)
            states[n + 1] = u
        return states

    def backward(self, terminal: np.ndarray, schedule: OperatorSchedule) -> AdjointSweep:
        """
        Transpose sweep: Z_n = (I + dt/2·A_n)^{-T} X_{n+1}, X_n = (I − dt/2·A_n)^T Z_n.

        Forcing of step n pairs with the stage vector Z_n.
        """
        self._reset_cache()
        x = np.array(terminal, dtype=float)
        states = np.empty((self.steps + 1, x.size))
        stages = np.empty((self.steps, x.size))
        states[-1] = x
        for n in reversed(range(self.steps)):
            factor, explicit = self._prepared(n, schedule)
            z = linalg.lu_solve(factor, x, trans=1, check_finite=False)
            x = explicit.T @ z
            self._check_finite(x, n)
            stages[n] = z
            states[n] = x
        return AdjointSweep(states=states, stages=stages)

    def pairing_vectors(self, sweep: AdjointSweep, n: int) -> Tuple[np.ndarray, np.ndarray]:
        stage = sweep.stages[n]
        return stage, stage
