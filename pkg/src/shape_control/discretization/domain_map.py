"""Transport matrix B(φ) of the fixed-domain reformulation.

Pulling the Laplacian on the deformed domain back to the reference domain
through x ↦ x + φ(x) gives div(B ∇·) with B = |det J| J⁻¹J⁻ᵀ and J = I + ∇φ.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from shape_control.discretization.base import DomainError, SingularityError

logger = logging.getLogger(__name__)

# Reciprocal condition number below which J counts as singular.
_RCOND_FLOOR = float(np.finfo(float).eps)


@dataclass(frozen=True)
class JacobianSample:
    """
    Value of ∇(id + φ) = I + ∇φ at one point.

    Attributes:
        J: Square real matrix
    """

    J: np.ndarray

    def __post_init__(self) -> None:
        J = np.array(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] == 0:
            raise DomainError(f"Jacobian sample must be a square matrix, got shape {J.shape}")
        if not np.all(np.isfinite(J)):
            raise DomainError("Jacobian sample has non-finite entries")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @classmethod
    def from_entries(cls, j11: float, j12: float, j21: float, j22: float) -> "JacobianSample":
        """2 x 2 sample from its entries, row by row."""
        return cls(J=np.array([[j11, j12], [j21, j22]], dtype=float))


def _checked_det(sample: JacobianSample) -> float:
    abs_det = abs(float(linalg.det(sample.J)))
    if abs_det == 0.0 or 1.0 / np.linalg.cond(sample.J) < _RCOND_FLOOR:
        raise SingularityError(f"Jacobian sample is singular (|det J| = {abs_det:.3g})", abs_det=abs_det)
    return abs_det


def transport_matrix(sample: JacobianSample) -> np.ndarray:
    """
    B = |det J| · J⁻¹ · J⁻ᵀ.

    Args:
        sample: Jacobian sample J

    Returns:
        Symmetric n x n matrix

    Raises:
        SingularityError: If J is singular; carries |det J|
    """
    abs_det = _checked_det(sample)
    J_inv = linalg.inv(sample.J)
    B = abs_det * J_inv @ J_inv.T
    # Exactly symmetric.
    return 0.5 * (B + B.T)


def transport_matrix_literal(sample: JacobianSample) -> np.ndarray:
    """
    B written with adjoints, |det J| · ((Jᵀ)⁻¹)ᵀ · (Jᵀ)⁻¹, without simplification.

    Raises:
        SingularityError: If J is singular
    """
    abs_det = _checked_det(sample)
    inv_adjoint = linalg.inv(sample.J.T)
    return abs_det * inv_adjoint.T @ inv_adjoint
