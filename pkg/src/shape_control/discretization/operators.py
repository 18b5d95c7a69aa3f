"""
Discrete Laplacian, perturbed operator A(φ(t)) and its directional derivatives.

The deformation moves the edge x = 0 by h·λ_j(t) at each boundary row j. It
only changes the stencil of the layer-1 nodes (1, j):

    centre  2(1 + 1/(1 + λ_j))/h²      (4/h² at λ_j = 0)
    east   −2/(2 + λ_j)/h²             (−1/h² at λ_j = 0)

with north/south couplings −1/h² and no west term (Dirichlet).
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from shape_control.constants import (
    DEFAULT_NORM_TRIALS,
    LAMBDA_BOUND,
    LAMBDA_CLAMP,
    NORM_BOUND_NUMERATOR,
    SLOPE_CLAMP,
    UNPERTURBED_NORM_NUMERATOR,
    WAVE_SLOPE_BOUND,
)
from shape_control.discretization.base import (
    AdmissibilityError,
    ContractError,
    DomainError,
    EquationKind,
)
from shape_control.discretization.grid import GridField, GridSpec
from shape_control.models.reports import NormBoundReport

logger = logging.getLogger(__name__)

# Slack on t ∈ [0, T] for times produced by accumulating steps.
_TIME_RTOL = 1e-12


@dataclass
class DeformationPath:
    """
    Time-dependent coefficients λ_j(t) of the boundary deformation.

    ``coeffs[j - 1, k]`` is the coefficient of boundary row j on segment k.
    Heat paths are piecewise constant over the K uniform segments. Wave paths
    are continuous and piecewise linear, anchored at λ(0) = 0, with
    ``coeffs[:, k]`` the value at the knot t = (k + 1)T/K.

    Admissibility is not enforced here: direction paths ψ may be arbitrary.
    Consumers call ``check_admissible`` where the bounds matter.

    Attributes:
        grid: Grid whose layer-1 rows the path deforms
        T: Horizon
        K: Number of time segments
        coeffs: Array of shape (N - 1, K)
        kind: Heat (piecewise constant) or wave (piecewise linear)
    """

    grid: GridSpec
    T: float
    K: int
    coeffs: np.ndarray
    kind: EquationKind = EquationKind.HEAT

    def __post_init__(self) -> None:
        self.kind = EquationKind(self.kind)
        if not self.T > 0:
            raise DomainError(f"Horizon T must be positive, got {self.T}")
        if int(self.K) != self.K or self.K < 1:
            raise DomainError(f"Segment count K must be a positive integer, got {self.K}")
        self.K = int(self.K)
        self.coeffs = np.array(self.coeffs, dtype=float)
        expected = (self.grid.n_layer1, self.K)
        if self.coeffs.shape != expected:
            raise DomainError(f"Coefficient array has shape {self.coeffs.shape}, expected {expected}")
        if not np.all(np.isfinite(self.coeffs)):
            raise DomainError("Deformation coefficients must be finite")

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------

    @classmethod
    def zeros(
        cls, grid: GridSpec, T: float, K: int, kind: Union[EquationKind, str] = EquationKind.HEAT
    ) -> "DeformationPath":
        """The undeformed path φ ≡ 0."""
        return cls(grid=grid, T=T, K=K, coeffs=np.zeros((grid.n_layer1, K)), kind=EquationKind(kind))

    @classmethod
    def basis(
        cls,
        grid: GridSpec,
        T: float,
        K: int,
        j: int,
        k: int,
        kind: Union[EquationKind, str] = EquationKind.HEAT,
        mu: float = 1.0,
    ) -> "DeformationPath":
        """
        Path with a single coefficient μ on boundary row j and segment k.

        Raises:
            DomainError: If j is outside 1..N-1 or k outside 0..K-1
        """
        if not (1 <= j <= grid.n_layer1):
            raise DomainError(f"Direction j={j} outside 1..{grid.n_layer1}")
        if not (0 <= k < K):
            raise DomainError(f"Segment k={k} outside 0..{K - 1}")
        coeffs = np.zeros((grid.n_layer1, K))
        coeffs[j - 1, k] = mu
        return cls(grid=grid, T=T, K=K, coeffs=coeffs, kind=EquationKind(kind))

    @classmethod
    def from_vector(
        cls,
        vector: np.ndarray,
        grid: GridSpec,
        T: float,
        K: int,
        kind: Union[EquationKind, str] = EquationKind.HEAT,
    ) -> "DeformationPath":
        """Inverse of ``to_vector``."""
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (grid.n_layer1 * K,):
            raise DomainError(
                f"Parameter vector has shape {vector.shape}, expected ({grid.n_layer1 * K},)"
            )
        return cls(grid=grid, T=T, K=K, coeffs=vector.reshape(grid.n_layer1, K), kind=EquationKind(kind))

    def to_vector(self) -> np.ndarray:
        """Flat parameters, index (j - 1)·K + k."""
        return self.coeffs.reshape(-1).copy()

    def with_vector(self, vector: np.ndarray) -> "DeformationPath":
        """Same grid, horizon and basis with new parameters."""
        return DeformationPath.from_vector(vector, self.grid, self.T, self.K, self.kind)

    def scaled(self, alpha: float) -> "DeformationPath":
        """The path α·φ."""
        return DeformationPath(self.grid, self.T, self.K, alpha * self.coeffs, self.kind)

    @property
    def n_params(self) -> int:
        return self.coeffs.size

    @property
    def segment_length(self) -> float:
        """Length T/K of one time segment."""
        return self.T / self.K

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def _check_time(self, t: float) -> float:
        if not (-_TIME_RTOL * self.T <= t <= self.T * (1.0 + _TIME_RTOL)):
            raise DomainError(f"Time t={t} outside [0, {self.T}]")
        return min(max(t, 0.0), self.T)

    def segment_index(self, t: float) -> int:
        """Segment containing t; t = T belongs to the last segment."""
        t = self._check_time(t)
        return min(int(math.floor(t / self.segment_length)), self.K - 1)

    def knot_values(self) -> np.ndarray:
        """Wave knot values including the anchor λ(0) = 0, shape (N - 1, K + 1)."""
        return np.hstack([np.zeros((self.grid.n_layer1, 1)), self.coeffs])

    def lambdas_at(self, t: float) -> np.ndarray:
        """
        Evaluate λ(t) for every boundary row.

        Raises:
            DomainError: If t is outside [0, T]
        """
        if self.kind is EquationKind.HEAT:
            return self.coeffs[:, self.segment_index(t)].copy()
        t = self._check_time(t)
        s = t / self.segment_length
        k = min(int(math.floor(s)), self.K - 1)
        w = s - k
        knots = self.knot_values()
        return (1.0 - w) * knots[:, k] + w * knots[:, k + 1]

    def slopes(self) -> np.ndarray:
        """Per-segment ∂_t λ of a wave path, shape (N - 1, K)."""
        return np.diff(self.knot_values(), axis=1) / self.segment_length

    # ------------------------------------------------------------------
    # Admissibility
    # ------------------------------------------------------------------

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def max_slope(self) -> float:
        return float(np.max(np.abs(self.slopes()))) if self.coeffs.size else 0.0

    def is_admissible(self) -> bool:
        if self.max_abs() >= LAMBDA_BOUND:
            return False
        if self.kind is EquationKind.WAVE and self.max_slope() >= WAVE_SLOPE_BOUND:
            return False
        return True

    def check_admissible(self) -> None:
        """
        Raises:
            AdmissibilityError: If |λ| ≥ 1/2 anywhere, or a wave slope reaches 1
        """
        max_abs = self.max_abs()
        if max_abs >= LAMBDA_BOUND:
            raise AdmissibilityError(
                f"Deformation coefficient reaches |λ| = {max_abs:.6g} (must stay below {LAMBDA_BOUND})"
            )
        if self.kind is EquationKind.WAVE:
            max_slope = self.max_slope()
            if max_slope >= WAVE_SLOPE_BOUND:
                raise AdmissibilityError(
                    f"Wave path moves with |∂_t λ| = {max_slope:.6g} "
                    f"(must stay below {WAVE_SLOPE_BOUND})"
                )

    def projected(self) -> "DeformationPath":
        """
        Nearest admissible path under the box clamp ±0.499.

        Wave paths are additionally swept forward in time so that every
        segment slope stays within ±0.999; the first segment is measured from
        the anchor λ(0) = 0.
        """
        coeffs = np.clip(self.coeffs, -LAMBDA_CLAMP, LAMBDA_CLAMP)
        if self.kind is EquationKind.WAVE:
            step = SLOPE_CLAMP * self.segment_length
            previous = np.zeros(self.grid.n_layer1)
            for k in range(self.K):
                coeffs[:, k] = np.clip(coeffs[:, k], previous - step, previous + step)
                previous = coeffs[:, k]
        return DeformationPath(self.grid, self.T, self.K, coeffs, self.kind)

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """JSON form {"kind", "T", "K", "lambda"} with one row per boundary node."""
        return {
            "kind": self.kind.value,
            "T": self.T,
            "K": self.K,
            "lambda": self.coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], grid: GridSpec) -> "DeformationPath":
        """
        Build a path from its JSON form.

        Raises:
            DomainError: If a key is missing or the coefficient table has the wrong shape
        """
        try:
            return cls(
                grid=grid,
                T=float(data["T"]),
                K=int(data["K"]),
                coeffs=np.array(data["lambda"], dtype=float),
                kind=EquationKind(data.get("kind", "heat")),
            )
        except KeyError as e:
            raise DomainError(f"Deformation path is missing key {e}") from e


# ============================================================================
# Coefficients
# ============================================================================


def check_lambdas(lambdas: np.ndarray) -> np.ndarray:
    """
    Validate instantaneous coefficients λ(t).

    Raises:
        AdmissibilityError: If some |λ_j| ≥ 1/2
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size and np.max(np.abs(lambdas)) >= LAMBDA_BOUND:
        raise AdmissibilityError(
            f"Deformation coefficient reaches |λ| = {np.max(np.abs(lambdas)):.6g} "
            f"(must stay below {LAMBDA_BOUND})"
        )
    return lambdas


def perturbed_coefficients(lambdas: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Centre and east stencil weights at the nodes (1, j)."""
    lambdas = np.asarray(lambdas, dtype=float)
    centre = 2.0 * (1.0 + 1.0 / (1.0 + lambdas)) / h**2
    east = -2.0 / (2.0 + lambdas) / h**2
    return centre, east


def derivative_coefficients(lambdas: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """d/dλ of the centre and east weights at (1, j)."""
    lambdas = np.asarray(lambdas, dtype=float)
    centre = -2.0 / (1.0 + lambdas) ** 2 / h**2
    east = 2.0 / (2.0 + lambdas) ** 2 / h**2
    return centre, east


# ============================================================================
# Matrices
# ============================================================================


@lru_cache(maxsize=32)
def laplacian_matrix(grid: GridSpec) -> np.ndarray:
    """
    Unperturbed 5-point Laplacian in interior-vector ordering (read-only).

    Args:
        grid: Grid specification

    Returns:
        Dense (M - 1)(N - 1) square matrix
    """
    def second_difference(n: int) -> np.ndarray:
        return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)

    nx, ny = grid.M - 1, grid.N - 1
    matrix = (
        np.kron(second_difference(nx), np.eye(ny)) + np.kron(np.eye(nx), second_difference(ny))
    ) / grid.h**2
    matrix.setflags(write=False)
    logger.debug(f"Assembled {matrix.shape[0]}x{matrix.shape[1]} Laplacian for {grid}")
    return matrix


def perturbed_matrix(lambdas: np.ndarray, grid: GridSpec) -> np.ndarray:
    """
    Matrix of A(φ) for instantaneous coefficients λ.

    Raises:
        AdmissibilityError: If some |λ_j| ≥ 1/2
    """
    lambdas = check_lambdas(lambdas)
    matrix = np.array(laplacian_matrix(grid))
    if not np.any(lambdas):
        return matrix
    rows = grid.layer1_indices()
    east = grid.east_of_layer1_indices()
    centre_w, east_w = perturbed_coefficients(lambdas, grid.h)
    matrix[rows, rows] = centre_w
    matrix[rows, east] = east_w
    return matrix


def assemble_matrix(path: Optional[DeformationPath], t: float, grid: GridSpec) -> np.ndarray:
    """
    Dense matrix of A(φ(t)), or of A when path is None.

    A(φ) is not symmetric for λ ≠ 0; adjoint solves take ``.T`` of the result.

    Raises:
        AdmissibilityError: If |λ_j(t)| ≥ 1/2
        DomainError: If t is outside [0, T]
    """
    if path is None:
        return np.array(laplacian_matrix(grid))
    _check_path_grid(path, grid)
    return perturbed_matrix(path.lambdas_at(t), grid)


def assemble_derivative_matrix(lambdas: np.ndarray, psi: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Matrix of A'(φ)[ψ] at instantaneous coefficients λ and direction values ψ."""
    psi = np.asarray(psi, dtype=float)
    rows = grid.layer1_indices()
    east = grid.east_of_layer1_indices()
    d_centre, d_east = derivative_coefficients(lambdas, grid.h)
    matrix = np.zeros((grid.n_interior, grid.n_interior))
    matrix[rows, rows] = psi * d_centre
    matrix[rows, east] = psi * d_east
    return matrix


def derivative_action(lambdas: np.ndarray, psi: np.ndarray, u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """A'(φ)[ψ]u as an interior vector; nonzero only on layer 1."""
    return assemble_derivative_matrix(lambdas, psi, grid) @ np.asarray(u, dtype=float)


def layer1_bracket(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """
    ½u_(2,j) − 2u_(1,j) for j = 1..N-1.

    Accepts a single interior vector or a stack of them along the last axis.
    """
    u = np.asarray(u, dtype=float)
    return 0.5 * u[..., grid.east_of_layer1_indices()] - 2.0 * u[..., grid.layer1_indices()]


def laplacian_eigenvalue(grid: GridSpec, p: int, q: int) -> float:
    """Eigenvalue of A for the discrete sine mode (p, q)."""
    return float(
        4.0
        / grid.h**2
        * (math.sin(p * math.pi / (2 * grid.M)) ** 2 + math.sin(q * math.pi / (2 * grid.N)) ** 2)
    )


# ============================================================================
# Field operators
# ============================================================================


def _check_field(field: GridField, grid: GridSpec) -> None:
    if not field.dirichlet:
        raise ContractError("Operator applied to a field not tagged Dirichlet")
    if field.grid != grid:
        raise ContractError(f"Field grid {field.grid} does not match {grid}")


def _check_path_grid(path: DeformationPath, grid: GridSpec) -> None:
    if path.grid != grid:
        raise ContractError(f"Deformation path grid {path.grid} does not match {grid}")


def apply_laplacian(field: GridField, grid: GridSpec) -> GridField:
    """
    [Af]_m = (4f(m) − Σ neighbours)/h² at every interior node.

    Raises:
        ContractError: If the field is not Dirichlet-tagged or lives on another grid
    """
    _check_field(field, grid)
    f = field.values
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = (
        4.0 * f[1:-1, 1:-1] - f[:-2, 1:-1] - f[2:, 1:-1] - f[1:-1, :-2] - f[1:-1, 2:]
    ) / grid.h**2
    return GridField(grid=grid, values=out)


def apply_perturbed(field: GridField, path: DeformationPath, t: float, grid: GridSpec) -> GridField:
    """
    [A(φ(t))f] at every interior node.

    Raises:
        AdmissibilityError: If |λ_j(t)| ≥ 1/2
        DomainError: If t is outside [0, T]
        ContractError: If the field is not Dirichlet-tagged
    """
    _check_path_grid(path, grid)
    lambdas = check_lambdas(path.lambdas_at(t))
    out = apply_laplacian(field, grid)
    if np.any(lambdas):
        f = field.values
        centre_w, east_w = perturbed_coefficients(lambdas, grid.h)
        h2 = grid.h**2
        # Replace the unperturbed centre (4/h²) and east (−1/h²) weights.
        out.values[1, 1:-1] += (centre_w - 4.0 / h2) * f[1, 1:-1] + (east_w + 1.0 / h2) * f[2, 1:-1]
    return out


def operator_derivative(direction_j: int, mu: float, field: GridField, grid: GridSpec) -> GridField:
    """
    A'(0)[μV_j]f: zero except at (1, j), where it is (μ/h²)(½f_(2,j) − 2f_(1,j)).

    Raises:
        DomainError: If j is outside 1..N-1
    """
    if not (1 <= direction_j <= grid.n_layer1):
        raise DomainError(f"Direction j={direction_j} outside 1..{grid.n_layer1}")
    _check_field(field, grid)
    f = field.values
    out = np.zeros(grid.shape)
    out[1, direction_j] = mu / grid.h**2 * (0.5 * f[2, direction_j] - 2.0 * f[1, direction_j])
    return GridField(grid=grid, values=out)


def operator_derivative_at(
    lambdas: np.ndarray, mu: np.ndarray, field: GridField, grid: GridSpec
) -> GridField:
    """
    A'(φ)[ψ]f at a nonzero base, with ψ values ``mu`` on each boundary row.

    At λ = 0 and mu = e_j this reduces to ``operator_derivative(j, 1, ...)``.
    """
    _check_field(field, grid)
    lambdas = check_lambdas(lambdas)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (grid.n_layer1,))
    f = field.values
    d_centre, d_east = derivative_coefficients(lambdas, grid.h)
    out = np.zeros(grid.shape)
    out[1, 1:-1] = mu * (d_centre * f[1, 1:-1] + d_east * f[2, 1:-1])
    return GridField(grid=grid, values=out)


# ============================================================================
# Norm bound
# ============================================================================


def _sup_ratio(matrix: np.ndarray, f: np.ndarray) -> float:
    norm = np.max(np.abs(f)) if f.size else 0.0
    if norm == 0.0:
        return 0.0
    return float(np.max(np.abs(matrix @ f)) / norm)


def operator_norm_bound_check(
    path: DeformationPath,
    grid: GridSpec,
    trials: int = DEFAULT_NORM_TRIALS,
    seed: Optional[int] = None,
) -> NormBoundReport:
    """
    Sample ‖A(φ(t))f‖∞/‖f‖∞ against the bound 28/(3h²).

    Each trial draws a time uniformly in [0, T] and a random field with
    ‖f‖∞ = 1. Every sampled time is also tested with the checkerboard field
    (−1)^(i+j), which attains the row sums of |A(φ)| at every node.

    Args:
        path: Admissible deformation path
        grid: Grid specification
        trials: Number of random fields
        seed: Seed for the random fields and times

    Returns:
        NormBoundReport with the largest ratio observed
    """
    _check_path_grid(path, grid)
    path.check_admissible()
    rng = np.random.default_rng(seed)
    bound = NORM_BOUND_NUMERATOR / grid.h**2
    i, j = np.meshgrid(np.arange(1, grid.M), np.arange(1, grid.N), indexing="ij")
    checkerboard = np.where((i + j).reshape(-1) % 2 == 0, 1.0, -1.0)

    max_ratio = 0.0
    argmax_time: Optional[float] = None
    for _ in range(trials):
        t = float(rng.uniform(0.0, path.T))
        matrix = assemble_matrix(path, t, grid)
        f = rng.uniform(-1.0, 1.0, grid.n_interior)
        f[rng.integers(grid.n_interior)] = rng.choice([-1.0, 1.0])
        for candidate in (f, checkerboard):
            ratio = _sup_ratio(matrix, candidate)
            if ratio > max_ratio:
                max_ratio, argmax_time = ratio, t

    if max_ratio > bound:
        logger.warning(f"Norm bound violated: ratio {max_ratio:.6g} > bound {bound:.6g}")
    return NormBoundReport(
        max_ratio=max_ratio,
        bound=bound,
        unperturbed_bound=UNPERTURBED_NORM_NUMERATOR / grid.h**2,
        trials=trials,
        argmax_time=argmax_time,
        satisfied=max_ratio <= bound,
    )
