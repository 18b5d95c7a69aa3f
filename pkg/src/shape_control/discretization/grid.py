"""Discretized rectangle, node classification and grid fields.

Nodes are m = (ih, jh) with 0 ≤ i ≤ M and 0 ≤ j ≤ N. Only the edge x = 0 is
deformable, and the deformation never moves stored coordinates: it lives in
the operator coefficients (see ``operators``).

Interior vectors are ordered column by column in i, with j fastest:
``k = (i - 1)(N - 1) + (j - 1)``. The unique-continuation recursion walks
the same columns.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Tuple

import numpy as np

from shape_control.constants import MIN_SUBDIVISIONS, UNIFORM_STEP_RTOL
from shape_control.discretization.base import ContractError, DomainError

logger = logging.getLogger(__name__)


class NodeClass(str, Enum):
    """Classification of a grid node."""

    INTERIOR = "interior"
    BOUNDARY = "boundary"
    LAYER1 = "layer1"

    @property
    def is_interior(self) -> bool:
        """Layer-1 nodes are interior nodes flagged for the moving edge."""
        return self is not NodeClass.BOUNDARY


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform discretization of the rectangle [0, a] x [0, b].

    Attributes:
        a: Rectangle width
        b: Rectangle height
        M: Number of x-subdivisions (≥ 3)
        N: Number of y-subdivisions (≥ 3)
    """

    a: float
    b: float
    M: int
    N: int

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"Rectangle sides must be positive, got a={self.a}, b={self.b}")
        if int(self.M) != self.M or int(self.N) != self.N:
            raise DomainError(f"Subdivisions must be integers, got M={self.M}, N={self.N}")
        if self.M < MIN_SUBDIVISIONS or self.N < MIN_SUBDIVISIONS:
            raise DomainError(
                f"M and N must be at least {MIN_SUBDIVISIONS}, got M={self.M}, N={self.N}"
            )
        hx = self.a / self.M
        hy = self.b / self.N
        if not math.isclose(hx, hy, rel_tol=UNIFORM_STEP_RTOL, abs_tol=0.0):
            raise DomainError(
                f"Anisotropic mesh rejected: a/M = {hx!r} but b/N = {hy!r}"
            )

    @property
    def h(self) -> float:
        """Mesh step h = a/M."""
        return self.a / self.M

    @property
    def n_interior(self) -> int:
        """Number of interior nodes, (M - 1)(N - 1)."""
        return (self.M - 1) * (self.N - 1)

    @property
    def n_layer1(self) -> int:
        """Number of layer-1 nodes (and of deformation directions), N - 1."""
        return self.N - 1

    @property
    def shape(self) -> Tuple[int, int]:
        """Shape of the full node array, (M + 1, N + 1)."""
        return (self.M + 1, self.N + 1)

    @property
    def diagonal(self) -> float:
        """Length of the rectangle diagonal."""
        return math.hypot(self.a, self.b)

    def interior_index(self, i: int, j: int) -> int:
        """
        Position of interior node (i, j) in interior vectors.

        Raises:
            DomainError: If (i, j) is not an interior node
        """
        if not (1 <= i <= self.M - 1 and 1 <= j <= self.N - 1):
            raise DomainError(f"Node ({i}, {j}) is not interior for M={self.M}, N={self.N}")
        return (i - 1) * (self.N - 1) + (j - 1)

    def layer1_indices(self) -> np.ndarray:
        """Interior-vector positions of the layer-1 nodes (1, j), j = 1..N-1."""
        return np.arange(self.N - 1)

    def east_of_layer1_indices(self) -> np.ndarray:
        """Interior-vector positions of the nodes (2, j), j = 1..N-1."""
        return np.arange(self.N - 1) + (self.N - 1)

    def interior_coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinates (x, y) of the interior nodes in interior-vector order."""
        i, j = np.meshgrid(
            np.arange(1, self.M), np.arange(1, self.N), indexing="ij"
        )
        return (i.reshape(-1) * self.h, j.reshape(-1) * self.h)

    def column_labels(self, prefix: str = "u") -> list:
        """Labels ``{prefix}_i_j`` of the interior nodes in interior-vector order."""
        return [
            f"{prefix}_{i}_{j}" for i in range(1, self.M) for j in range(1, self.N)
        ]

    def to_dict(self) -> Dict[str, Any]:
        """JSON form used under the run-config key "grid"."""
        return {"a": self.a, "b": self.b, "M": self.M, "N": self.N}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridSpec":
        """Build a grid from its JSON form."""
        try:
            return cls(a=float(data["a"]), b=float(data["b"]), M=int(data["M"]), N=int(data["N"]))
        except KeyError as e:
            raise DomainError(f"Grid definition is missing key {e}") from e


@dataclass
class GridField:
    """
    Real values on every node of a grid.

    Attributes:
        grid: Grid the field lives on
        values: Array of shape (M + 1, N + 1), row-major with j fastest
        dirichlet: Whether the field vanishes on every boundary node
    """

    grid: GridSpec
    values: np.ndarray
    dirichlet: bool = True

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise DomainError(
                f"Field shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )
        if self.dirichlet and _boundary_norm(self.values) != 0.0:
            raise ContractError("Field tagged Dirichlet has nonzero boundary values")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "GridField":
        """Zero Dirichlet field."""
        return cls(grid=grid, values=np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable[[np.ndarray, np.ndarray], Any]) -> "GridField":
        """Sample ``func(x, y)`` on the interior; the boundary is set to zero."""
        x, y = grid.interior_coordinates()
        values = np.broadcast_to(np.asarray(func(x, y), dtype=float), x.shape)
        return vector_to_interior(np.array(values), grid)

    def __getitem__(self, node: Tuple[int, int]) -> float:
        return float(self.values[node])

    def interior(self) -> np.ndarray:
        """Interior values as a (M - 1, N - 1) array (a view)."""
        return self.values[1:-1, 1:-1]


def _boundary_norm(values: np.ndarray) -> float:
    return float(
        max(
            np.abs(values[0, :]).max(),
            np.abs(values[-1, :]).max(),
            np.abs(values[:, 0]).max(),
            np.abs(values[:, -1]).max(),
        )
    )


def classify(grid: GridSpec, i: int, j: int) -> NodeClass:
    """
    Classify node (i, j).

    A node is interior when its four axis neighbours lie in the grid; interior
    nodes of the first column i = 1 are reported as LAYER1.

    Raises:
        DomainError: If (i, j) lies outside 0..M x 0..N
    """
    if not (0 <= i <= grid.M and 0 <= j <= grid.N):
        raise DomainError(f"Node ({i}, {j}) outside grid with M={grid.M}, N={grid.N}")
    if i in (0, grid.M) or j in (0, grid.N):
        return NodeClass.BOUNDARY
    if i == 1:
        return NodeClass.LAYER1
    return NodeClass.INTERIOR


def interior_to_vector(field: GridField) -> np.ndarray:
    """
    Flatten the interior of a Dirichlet field, k = (i - 1)(N - 1) + (j - 1).

    Raises:
        ContractError: If the field is not tagged Dirichlet
    """
    if not field.dirichlet:
        raise ContractError("interior_to_vector requires a Dirichlet-tagged field")
    return field.interior().reshape(-1).copy()


def vector_to_interior(v: np.ndarray, grid: GridSpec) -> GridField:
    """
    Inverse of interior_to_vector; the boundary is filled with zeros.

    Raises:
        DomainError: If the vector length is not (M - 1)(N - 1)
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != grid.n_interior:
        raise DomainError(
            f"Expected an interior vector of length {grid.n_interior}, got shape {v.shape}"
        )
    values = np.zeros(grid.shape)
    values[1:-1, 1:-1] = v.reshape(grid.M - 1, grid.N - 1)
    return GridField(grid=grid, values=values)


def sine_mode(grid: GridSpec, p: int, q: int) -> np.ndarray:
    """
    Interior vector of sin(pπx/a)·sin(qπy/b), a discrete Dirichlet eigenvector.

    Raises:
        DomainError: If (p, q) is outside 1..M-1 x 1..N-1
    """
    if not (1 <= p <= grid.M - 1 and 1 <= q <= grid.N - 1):
        raise DomainError(f"Mode ({p}, {q}) outside 1..{grid.M - 1} x 1..{grid.N - 1}")
    x, y = grid.interior_coordinates()
    return np.sin(p * np.pi * x / grid.a) * np.sin(q * np.pi * y / grid.b)
