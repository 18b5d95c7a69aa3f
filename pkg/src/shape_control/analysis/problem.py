"""The controllability problem shared by the sensitivity, adjoint and control layers."""

import logging
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from shape_control.analysis.dynamics import SourceTerm, StateTrajectory, solve
from shape_control.discretization.base import ContractError, DomainError, EquationKind
from shape_control.discretization.grid import GridSpec
from shape_control.discretization.operators import DeformationPath

logger = logging.getLogger(__name__)


@dataclass
class ControlProblem:
    """
    Equation, data and target of a shape-control run.

    Attributes:
        kind: Heat or wave
        grid: Grid specification
        F: Source term
        u0: Initial interior vector
        T: Horizon
        steps: Requested number of time steps
        K: Number of path segments
        u1: Initial velocity (wave only)
        target: Final trace to reach; dimension n (heat) or 2n (wave)
    """

    kind: EquationKind
    grid: GridSpec
    F: SourceTerm
    u0: np.ndarray
    T: float
    steps: int
    K: int
    u1: Optional[np.ndarray] = None
    target: Optional[np.ndarray] = None
    _reference: Optional[StateTrajectory] = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self) -> None:
        self.kind = EquationKind(self.kind)
        n = self.grid.n_interior
        self.u0 = np.zeros(n) if self.u0 is None else np.asarray(self.u0, dtype=float)
        if self.u0.shape != (n,):
            raise DomainError(f"u0 has shape {self.u0.shape}, expected ({n},)")
        if self.kind is EquationKind.WAVE:
            self.u1 = np.zeros(n) if self.u1 is None else np.asarray(self.u1, dtype=float)
            if self.u1.shape != (n,):
                raise DomainError(f"u1 has shape {self.u1.shape}, expected ({n},)")
        elif self.u1 is not None:
            raise ContractError("Heat problems take no initial velocity")
        if int(self.K) != self.K or self.K < 1:
            raise DomainError(f"K must be a positive integer, got {self.K}")
        if self.target is not None:
            self.target = self.check_trace(self.target, "target")

    @property
    def state_dim(self) -> int:
        """Dimension of the final trace: n for heat, 2n for wave."""
        factor = 2 if self.kind is EquationKind.WAVE else 1
        return factor * self.grid.n_interior

    @property
    def n_params(self) -> int:
        """Number of path coefficients, (N - 1)·K."""
        return self.grid.n_layer1 * self.K

    def check_trace(self, vector: np.ndarray, name: str = "trace") -> np.ndarray:
        """
        Raises:
            ContractError: If the vector does not have the trace dimension
        """
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.state_dim,):
            raise ContractError(
                f"{name} has shape {vector.shape}, expected ({self.state_dim},) for {self.kind.value}"
            )
        return vector

    def zero_path(self) -> DeformationPath:
        return DeformationPath.zeros(self.grid, self.T, self.K, self.kind)

    def path_from_vector(self, vector: np.ndarray) -> DeformationPath:
        return DeformationPath.from_vector(vector, self.grid, self.T, self.K, self.kind)

    def basis_path(self, j: int, k: int) -> DeformationPath:
        """Unit direction on boundary row j and segment k."""
        return DeformationPath.basis(self.grid, self.T, self.K, j, k, self.kind)

    def check_path(self, path: DeformationPath) -> None:
        """
        Raises:
            ContractError: If the path basis differs from the problem's
        """
        if path.grid != self.grid or path.K != self.K or path.kind is not self.kind:
            raise ContractError(
                f"Path basis (K={path.K}, {path.kind.value}) incompatible with problem "
                f"(K={self.K}, {self.kind.value})"
            )
        if not np.isclose(path.T, self.T, rtol=1e-12, atol=0.0):
            raise ContractError(f"Path horizon {path.T} differs from problem horizon {self.T}")

    def solve(self, path: Optional[DeformationPath]) -> StateTrajectory:
        """Forward solve on the problem's segment-aligned time grid."""
        if path is not None:
            self.check_path(path)
        return solve(self.kind, path, self.F, self.u0, self.T, self.steps, self.grid, u1=self.u1, K=self.K)

    def reference(self) -> StateTrajectory:
        """Unperturbed trajectory, computed once."""
        with self._lock:
            if self._reference is None:
                logger.info(f"Computing {self.kind.value} reference state on {self.grid}")
                self._reference = self.solve(None)
            return self._reference

    def with_target(self, target: np.ndarray) -> "ControlProblem":
        """Copy of the problem with another target, sharing the cached reference."""
        problem = ControlProblem(
            kind=self.kind,
            grid=self.grid,
            F=self.F,
            u0=self.u0,
            T=self.T,
            steps=self.steps,
            K=self.K,
            u1=self.u1,
            target=target,
        )
        problem._reference = self._reference
        return problem
