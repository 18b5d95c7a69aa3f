"""
Tests for the discrete Laplacian, the perturbed operator and its derivative.
"""

import numpy as np
import pytest
from scipy import linalg

from shape_control.discretization.base import AdmissibilityError, ContractError, DomainError, EquationKind
from shape_control.discretization.grid import GridField, interior_to_vector, sine_mode, vector_to_interior
from shape_control.discretization.operators import (
    DeformationPath,
    apply_laplacian,
    apply_perturbed,
    assemble_derivative_matrix,
    assemble_matrix,
    derivative_action,
    laplacian_eigenvalue,
    laplacian_matrix,
    operator_derivative,
    operator_derivative_at,
    operator_norm_bound_check,
    perturbed_matrix,
)
from tests.utils.oracles import five_point_matrix, loglog_slope, smallest_eigenpair


def constant_path(grid, value, T=1.0, K=1, kind=EquationKind.HEAT):
    return DeformationPath(grid, T, K, np.full((grid.n_layer1, K), value), kind)


def unit_field(grid, i, j):
    values = np.zeros(grid.shape)
    values[i, j] = 1.0
    return GridField(grid=grid, values=values)


class TestLaplacian:
    """Test suite for the unperturbed operator A."""

    def test_matches_stencil(self, grid5):
        """Row (2, 2): diagonal 4/h² = 64 and four neighbours −1/h² = −16."""
        A = laplacian_matrix(grid5)
        np.testing.assert_array_equal(A, five_point_matrix(grid5))
        row = A[grid5.interior_index(2, 2)]
        assert row[4] == 64.0
        assert sorted(row[[1, 3, 5, 7]]) == [-16.0] * 4
        assert np.count_nonzero(row) == 5

    def test_symmetric_positive_definite(self, grid5):
        A = laplacian_matrix(grid5)
        np.testing.assert_array_equal(A, A.T)
        assert linalg.eigvalsh(A).min() > 0

    def test_read_only(self, grid5):
        with pytest.raises(ValueError):
            laplacian_matrix(grid5)[0, 0] = 1.0

    def test_apply_unit_field(self, grid5):
        out = apply_laplacian(unit_field(grid5, 2, 2), grid5)
        assert out[2, 2] == 64.0
        assert out[1, 2] == -16.0
        assert out[1, 1] == 0.0

    def test_apply_zero_field(self, grid5):
        out = apply_laplacian(GridField.zeros(grid5), grid5)
        assert not np.any(out.values)

    def test_eigenvector(self, grid5):
        """A·sin(πx)sin(πy) = λ₁·sin(πx)sin(πy) with λ₁ from the dense eigensolver."""
        lam, _ = smallest_eigenpair(grid5)
        assert lam == pytest.approx(18.7452, abs=1e-4)
        assert laplacian_eigenvalue(grid5, 1, 1) == pytest.approx(lam, rel=1e-12)

        mode = sine_mode(grid5, 1, 1)
        out = interior_to_vector(apply_laplacian(vector_to_interior(mode, grid5), grid5))
        np.testing.assert_allclose(out, lam * mode, rtol=1e-12)

    def test_rejects_untagged_field(self, grid5):
        field = GridField(grid=grid5, values=np.zeros(grid5.shape), dirichlet=False)
        with pytest.raises(ContractError):
            apply_laplacian(field, grid5)


class TestPerturbedOperator:
    """Test suite for A(φ)."""

    def test_zero_path_is_laplacian(self, grid5):
        path = DeformationPath.zeros(grid5, 1.0, 2)
        np.testing.assert_array_equal(assemble_matrix(path, 0.3, grid5), laplacian_matrix(grid5))

    def test_quarter_coefficients(self, grid5):
        """λ = 0.25: centre 2(1 + 1/1.25)/h² = 57.6, east −(2/2.25)/h² = −14.2222..."""
        A = assemble_matrix(constant_path(grid5, 0.25), 0.5, grid5)
        for j in range(1, grid5.N):
            row = grid5.interior_index(1, j)
            assert A[row, row] == pytest.approx(57.6, rel=1e-14)
            assert A[row, grid5.interior_index(2, j)] == pytest.approx(-32.0 / 2.25, rel=1e-14)
        assert not np.array_equal(A, A.T)

    def test_apply_matches_formula(self, grid5):
        path = constant_path(grid5, 0.25)
        at_layer1 = apply_perturbed(unit_field(grid5, 1, 2), path, 0.0, grid5)
        at_east = apply_perturbed(unit_field(grid5, 2, 2), path, 0.0, grid5)
        assert at_layer1[1, 2] == pytest.approx(57.6, rel=1e-14)
        assert at_east[1, 2] == pytest.approx(-14.2222222222, rel=1e-10)
        assert at_east[2, 2] == 64.0

    def test_matrix_agrees_with_stencil(self, grid5, rng):
        """assemble_matrix @ f equals apply_perturbed on 10 random fields."""
        path = DeformationPath(grid5, 1.0, 3, rng.uniform(-0.45, 0.45, (3, 3)))
        for _ in range(10):
            t = float(rng.uniform(0.0, 1.0))
            f = rng.standard_normal(grid5.n_interior)
            expected = interior_to_vector(apply_perturbed(vector_to_interior(f, grid5), path, t, grid5))
            actual = assemble_matrix(path, t, grid5) @ f
            assert np.linalg.norm(actual - expected) <= 1e-12 * np.linalg.norm(expected)

    def test_inadmissible_coefficient(self, grid5):
        path = constant_path(grid5, 0.5)
        with pytest.raises(AdmissibilityError):
            assemble_matrix(path, 0.0, grid5)
        with pytest.raises(AdmissibilityError):
            apply_perturbed(GridField.zeros(grid5), path, 0.0, grid5)

    def test_time_outside_horizon(self, grid5):
        with pytest.raises(DomainError):
            apply_perturbed(GridField.zeros(grid5), constant_path(grid5, 0.1), 1.5, grid5)


class TestOperatorDerivative:
    """Test suite for A'(0)[μV_j] and A'(φ)[ψ]."""

    def test_constant_field(self, grid5):
        """μ = 1, f ≡ 1: value 16·(0.5 − 2) = −24 at (1, j), zero elsewhere."""
        ones = GridField.from_function(grid5, lambda x, y: 1.0)
        for j in range(1, grid5.N):
            out = operator_derivative(j, 1.0, ones, grid5)
            assert out[1, j] == -24.0
            assert np.count_nonzero(out.values) == 1

    def test_zero_mu(self, grid5):
        ones = GridField.from_function(grid5, lambda x, y: 1.0)
        assert not np.any(operator_derivative(2, 0.0, ones, grid5).values)

    def test_linear_in_mu(self, grid5, rng):
        field = vector_to_interior(rng.standard_normal(grid5.n_interior), grid5)
        base = operator_derivative(1, 0.7, field, grid5).values
        scaled = operator_derivative(1, -2.1, field, grid5).values
        np.testing.assert_allclose(scaled, -3.0 * base, rtol=1e-14)

    @pytest.mark.parametrize("j", [0, 4])
    def test_direction_out_of_range(self, grid5, j):
        with pytest.raises(DomainError):
            operator_derivative(j, 1.0, GridField.zeros(grid5), grid5)

    @pytest.mark.parametrize("j", [1, 2, 3])
    def test_finite_difference_consistency(self, grid5, j):
        """‖(A(εV_j) − A)/ε − A'(0)[V_j]‖∞ shrinks like ε."""
        direction = np.zeros(grid5.n_layer1)
        direction[j - 1] = 1.0
        derivative = assemble_derivative_matrix(np.zeros(grid5.n_layer1), direction, grid5)
        eps_list = [1e-2, 1e-3, 1e-4]
        errors = [
            np.abs(
                (perturbed_matrix(eps * direction, grid5) - laplacian_matrix(grid5)) / eps - derivative
            ).max()
            for eps in eps_list
        ]
        assert 0.9 <= loglog_slope(eps_list, errors) <= 1.1

    def test_nonzero_base_closed_form(self, grid5, rng):
        """A'(φ)[ψ]f matches a central difference of A(λ) in λ."""
        lambdas = np.array([0.2, -0.1, 0.3])
        psi = rng.standard_normal(grid5.n_layer1)
        field = vector_to_interior(rng.standard_normal(grid5.n_interior), grid5)
        f = interior_to_vector(field)
        eps = 1e-6
        difference = (
            perturbed_matrix(lambdas + eps * psi, grid5) - perturbed_matrix(lambdas - eps * psi, grid5)
        ) @ f / (2 * eps)
        closed = interior_to_vector(operator_derivative_at(lambdas, psi, field, grid5))
        np.testing.assert_allclose(closed, difference, rtol=1e-6, atol=1e-6)

    def test_reduces_to_derivative_at_zero(self, grid5, rng):
        field = vector_to_interior(rng.standard_normal(grid5.n_interior), grid5)
        mu = np.array([0.0, 1.0, 0.0])
        np.testing.assert_allclose(
            operator_derivative_at(np.zeros(3), mu, field, grid5).values,
            operator_derivative(2, 1.0, field, grid5).values,
            rtol=1e-14,
        )

    def test_action_uses_assembled_matrix(self, grid5, rng):
        """The vector action used by the sensitivity sweeps matches the field operator."""
        lambdas = np.array([0.1, -0.2, 0.05])
        psi = rng.standard_normal(grid5.n_layer1)
        u = rng.standard_normal(grid5.n_interior)
        action = derivative_action(lambdas, psi, u, grid5)
        field = operator_derivative_at(lambdas, psi, vector_to_interior(u, grid5), grid5)
        np.testing.assert_allclose(action, interior_to_vector(field), rtol=1e-12, atol=1e-12)
        off_layer1 = np.setdiff1d(np.arange(grid5.n_interior), grid5.layer1_indices())
        assert not np.any(action[off_layer1])


class TestNormBound:
    """Test suite for the 28/(3h²) bound on ‖A(φ)‖∞."""

    def test_zero_path(self, grid5):
        report = operator_norm_bound_check(DeformationPath.zeros(grid5, 1.0, 2), grid5, trials=200, seed=1)
        assert report.satisfied
        assert report.bound == pytest.approx(28.0 / 3.0 * 16.0)
        assert report.max_ratio <= report.unperturbed_bound * (1 + 1e-12)

    def test_near_extremal_path(self, grid5):
        report = operator_norm_bound_check(constant_path(grid5, 0.49), grid5, trials=1000, seed=2)
        assert report.satisfied
        assert report.max_ratio <= report.bound

    def test_no_trials(self, grid5):
        report = operator_norm_bound_check(constant_path(grid5, 0.1), grid5, trials=0)
        assert report.max_ratio == 0.0
        assert report.argmax_time is None

    def test_requires_admissible_path(self, grid5):
        with pytest.raises(AdmissibilityError):
            operator_norm_bound_check(constant_path(grid5, -0.5), grid5, trials=1)

    def test_reproducible(self, grid5):
        path = constant_path(grid5, -0.3, K=1)
        first = operator_norm_bound_check(path, grid5, trials=20, seed=3)
        second = operator_norm_bound_check(path, grid5, trials=20, seed=3)
        assert first == second


class TestDeformationPath:
    """Test suite for path evaluation, admissibility and JSON form."""

    def test_heat_is_piecewise_constant(self, grid5):
        coeffs = np.array([[0.1, 0.2], [0.0, -0.1], [0.3, 0.3]])
        path = DeformationPath(grid5, 1.0, 2, coeffs)
        np.testing.assert_array_equal(path.lambdas_at(0.25), coeffs[:, 0])
        np.testing.assert_array_equal(path.lambdas_at(0.5), coeffs[:, 1])
        np.testing.assert_array_equal(path.lambdas_at(1.0), coeffs[:, 1])

    def test_wave_is_piecewise_linear_from_zero(self, grid5):
        coeffs = np.array([[0.2, 0.4], [0.0, 0.0], [-0.2, 0.0]])
        path = DeformationPath(grid5, 2.0, 2, coeffs, EquationKind.WAVE)
        np.testing.assert_array_equal(path.lambdas_at(0.0), np.zeros(3))
        np.testing.assert_allclose(path.lambdas_at(0.5), [0.1, 0.0, -0.1])
        np.testing.assert_allclose(path.lambdas_at(1.0), coeffs[:, 0])
        np.testing.assert_allclose(path.lambdas_at(1.5), [0.3, 0.0, -0.1])
        np.testing.assert_allclose(path.slopes(), [[0.2, 0.2], [0.0, 0.0], [-0.2, 0.2]])

    def test_vector_ordering(self, grid5):
        """Parameter (j - 1)·K + k is the coefficient of row j on segment k."""
        path = DeformationPath.basis(grid5, 1.0, 3, j=2, k=1)
        vector = path.to_vector()
        assert vector[(2 - 1) * 3 + 1] == 1.0
        assert vector.sum() == 1.0
        assert DeformationPath.from_vector(vector, grid5, 1.0, 3).coeffs[1, 1] == 1.0

    def test_wave_slope_admissibility(self, grid5):
        path = DeformationPath(grid5, 1.0, 4, np.full((3, 4), 0.3), EquationKind.WAVE)
        assert path.max_abs() < 0.5
        assert path.max_slope() == pytest.approx(1.2)
        with pytest.raises(AdmissibilityError, match="∂_t λ"):
            path.check_admissible()

    def test_anchor_bounds_first_segment(self, grid5):
        """Constant knots 0.3: only the rise from λ(0) = 0 on the first segment is too steep."""
        coeffs = np.full((3, 4), 0.3)
        wave = DeformationPath(grid5, 1.0, 4, coeffs, EquationKind.WAVE)
        np.testing.assert_allclose(wave.slopes()[:, 0], 1.2)
        assert not np.any(wave.slopes()[:, 1:])
        assert not wave.is_admissible()
        assert DeformationPath(grid5, 1.0, 4, coeffs).is_admissible()
        gentle = DeformationPath(grid5, 1.0, 4, np.full((3, 4), 0.2), EquationKind.WAVE)
        assert gentle.is_admissible()

    def test_projection(self, grid5):
        heat = DeformationPath(grid5, 1.0, 2, np.array([[0.7, -0.2], [-0.9, 0.1], [0.0, 0.499]]))
        projected = heat.projected()
        assert projected.is_admissible()
        assert projected.coeffs[0, 0] == 0.499
        assert projected.coeffs[1, 0] == -0.499

        wave = DeformationPath(grid5, 1.0, 4, np.full((3, 4), 0.45), EquationKind.WAVE).projected()
        assert wave.is_admissible()
        assert wave.max_slope() < 1.0

    def test_json_form(self, grid5):
        path = DeformationPath(grid5, 0.1, 2, np.array([[0.1, 0.2], [0.3, 0.4], [0.0, -0.1]]))
        data = path.to_dict()
        assert set(data) == {"kind", "T", "K", "lambda"}
        assert data["lambda"][1] == [0.3, 0.4]
        rebuilt = DeformationPath.from_dict(data, grid5)
        np.testing.assert_array_equal(rebuilt.coeffs, path.coeffs)

    def test_shape_checked(self, grid5):
        with pytest.raises(DomainError):
            DeformationPath(grid5, 1.0, 2, np.zeros((2, 2)))
        with pytest.raises(DomainError, match="missing key"):
            DeformationPath.from_dict({"T": 1.0, "K": 1}, grid5)
