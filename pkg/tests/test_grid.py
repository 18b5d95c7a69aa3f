"""
Tests for the grid module: node classification and interior vectors.
"""

import numpy as np
import pytest

from shape_control.discretization.base import ContractError, DomainError
from shape_control.discretization.grid import (
    GridField,
    GridSpec,
    NodeClass,
    classify,
    interior_to_vector,
    sine_mode,
    vector_to_interior,
)


class TestGridSpec:
    """Test suite for GridSpec construction."""

    def test_uniform_mesh(self, grid5):
        """h·M = a and h·N = b, with (M-1)(N-1) interior nodes."""
        assert grid5.h == 0.25
        assert grid5.h * grid5.M == pytest.approx(grid5.a, rel=1e-15)
        assert grid5.h * grid5.N == pytest.approx(grid5.b, rel=1e-15)
        assert grid5.n_interior == 9
        assert grid5.n_layer1 == 3
        assert grid5.shape == (5, 5)

    def test_rectangular_uniform_mesh(self):
        """a/M = b/N on a non-square rectangle is accepted."""
        grid = GridSpec(a=2.0, b=1.0, M=8, N=4)
        assert grid.h == 0.25
        assert grid.n_interior == 21

    def test_anisotropic_mesh_rejected(self):
        """a/M ≠ b/N raises DomainError."""
        with pytest.raises(DomainError, match="Anisotropic"):
            GridSpec(a=1.0, b=2.0, M=4, N=4)

    @pytest.mark.parametrize("M,N", [(2, 4), (4, 2)])
    def test_too_few_subdivisions(self, M, N):
        """M and N below 3 are rejected."""
        with pytest.raises(DomainError):
            GridSpec(a=float(M), b=float(N), M=M, N=N)

    def test_non_positive_sides(self):
        with pytest.raises(DomainError):
            GridSpec(a=0.0, b=1.0, M=4, N=4)

    def test_dict_form(self, grid5):
        """The run-config "grid" object rebuilds the same grid."""
        assert grid5.to_dict() == {"a": 1.0, "b": 1.0, "M": 4, "N": 4}
        assert GridSpec.from_dict(grid5.to_dict()) == grid5
        with pytest.raises(DomainError, match="missing key"):
            GridSpec.from_dict({"a": 1.0, "b": 1.0, "M": 4})


class TestClassify:
    """Test suite for node classification."""

    def test_examples(self, grid5):
        assert classify(grid5, 0, 2) is NodeClass.BOUNDARY
        assert classify(grid5, 2, 2) is NodeClass.INTERIOR
        assert classify(grid5, 1, 3) is NodeClass.LAYER1

    def test_partition(self, grid5):
        """Interior ∪ Boundary covers all (M+1)(N+1) nodes; Layer1 has N-1 members."""
        classes = [classify(grid5, i, j) for i in range(grid5.M + 1) for j in range(grid5.N + 1)]
        interior = sum(c.is_interior for c in classes)
        boundary = sum(c is NodeClass.BOUNDARY for c in classes)
        layer1 = sum(c is NodeClass.LAYER1 for c in classes)

        assert interior + boundary == (grid5.M + 1) * (grid5.N + 1)
        assert interior == grid5.n_interior
        assert layer1 == grid5.N - 1

    def test_layer1_corners_are_boundary(self, grid5):
        """(1, 0) and (1, N) sit on the boundary, not on layer 1."""
        assert classify(grid5, 1, 0) is NodeClass.BOUNDARY
        assert classify(grid5, 1, grid5.N) is NodeClass.BOUNDARY

    @pytest.mark.parametrize("i,j", [(-1, 2), (5, 2), (2, 5), (2, -1)])
    def test_out_of_range(self, grid5, i, j):
        with pytest.raises(DomainError):
            classify(grid5, i, j)


class TestInteriorVectors:
    """Test suite for interior_to_vector / vector_to_interior."""

    def test_ordering(self, grid5):
        """k = (i-1)(N-1) + (j-1)."""
        assert grid5.interior_index(1, 1) == 0
        assert grid5.interior_index(1, 3) == 2
        assert grid5.interior_index(2, 1) == 3
        assert grid5.interior_index(3, 3) == 8
        np.testing.assert_array_equal(grid5.layer1_indices(), [0, 1, 2])
        np.testing.assert_array_equal(grid5.east_of_layer1_indices(), [3, 4, 5])
        assert grid5.column_labels()[:4] == ["u_1_1", "u_1_2", "u_1_3", "u_2_1"]

    def test_center_unit_vector(self, grid5):
        """e₅ on the 3 x 3 interior is the node (2, 2)."""
        v = np.zeros(9)
        v[4] = 1.0
        field = vector_to_interior(v, grid5)
        assert field[2, 2] == 1.0
        assert field.values.sum() == 1.0

    def test_round_trip(self, grid5, rng):
        v = rng.standard_normal(grid5.n_interior)
        np.testing.assert_array_equal(interior_to_vector(vector_to_interior(v, grid5)), v)

    def test_zero_vector(self, grid5):
        field = vector_to_interior(np.zeros(grid5.n_interior), grid5)
        assert not np.any(field.values)

    def test_length_mismatch(self, grid5):
        with pytest.raises(DomainError, match="length 9"):
            vector_to_interior(np.zeros(8), grid5)

    def test_coordinates_follow_ordering(self, grid5):
        x, y = grid5.interior_coordinates()
        k = grid5.interior_index(2, 3)
        assert (x[k], y[k]) == (0.5, 0.75)


class TestGridField:
    """Test suite for the Dirichlet tag."""

    def test_dirichlet_boundary_must_vanish(self, grid5):
        values = np.zeros(grid5.shape)
        values[0, 2] = 1.0
        with pytest.raises(ContractError):
            GridField(grid=grid5, values=values)

    def test_untagged_field_is_not_flattened(self, grid5):
        values = np.ones(grid5.shape)
        field = GridField(grid=grid5, values=values, dirichlet=False)
        with pytest.raises(ContractError):
            interior_to_vector(field)

    def test_shape_mismatch(self, grid5):
        with pytest.raises(DomainError):
            GridField(grid=grid5, values=np.zeros((4, 4)))

    def test_from_function_zeroes_boundary(self, grid5):
        field = GridField.from_function(grid5, lambda x, y: x + y)
        assert field[0, 0] == 0.0
        assert field[1, 2] == pytest.approx(0.75)


class TestSineMode:
    """Test suite for discrete sine modes."""

    def test_values(self, grid5):
        mode = sine_mode(grid5, 1, 1)
        assert mode[grid5.interior_index(2, 2)] == pytest.approx(1.0)
        assert mode[grid5.interior_index(1, 1)] == pytest.approx(0.5)

    def test_out_of_range(self, grid5):
        with pytest.raises(DomainError):
            sine_mode(grid5, 4, 1)
