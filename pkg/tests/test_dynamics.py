"""
Tests for the forward heat and wave solvers, sources and trajectories.
"""

import math

import numpy as np
import pytest
from scipy import linalg

from shape_control.analysis.dynamics import (
    ConstantSource,
    ExpressionSource,
    SeparableSource,
    StateTrajectory,
    TabulatedSource,
    estimate_lambda_max,
    reference_state,
    solve_heat,
    solve_wave,
    time_grid,
)
from shape_control.discretization.base import (
    AdmissibilityError,
    CFLViolationError,
    ConfigurationError,
    ContractError,
    DomainError,
    EquationKind,
)
from shape_control.discretization.expressions import Expression
from shape_control.discretization.operators import DeformationPath, laplacian_matrix
from tests.utils.oracles import relative_error, smallest_eigenpair

ZERO = ConstantSource(0.0)


class TestTimeGrid:
    """Test suite for the segment-aligned time grid."""

    def test_rounds_steps_up_to_segments(self):
        times, steps_per_segment = time_grid(1.0, 3, 10)
        assert steps_per_segment == 4
        assert times.size == 13
        assert times[0] == 0.0
        assert times[-1] == 1.0

    def test_exact_multiple(self):
        times, steps_per_segment = time_grid(0.1, 3, 300)
        assert steps_per_segment == 100
        assert times.size == 301

    @pytest.mark.parametrize("T, K, steps", [(0.0, 1, 10), (1.0, 0, 10), (1.0, 2, 0), (1.0, 2, 2.5)])
    def test_rejects_invalid(self, T, K, steps):
        with pytest.raises(DomainError):
            time_grid(T, K, steps)


class TestHeatSolver:
    """Test suite for solve_heat."""

    def test_zero_data_stays_zero(self, grid5):
        trajectory = solve_heat(None, ZERO, None, 0.1, 100, grid5)
        assert not np.any(trajectory.states)

    def test_eigenmode_decay(self, grid5):
        """u0 = e₁ decays like exp(−λ₁ t)."""
        lam, mode = smallest_eigenpair(grid5)
        trajectory = solve_heat(None, ZERO, mode, 0.1, 2000, grid5)
        assert relative_error(trajectory.final_state, math.exp(-lam * 0.1) * mode) <= 1e-4

    def test_steady_state(self, grid5):
        """With F ≡ 1 the state settles on A u = 1."""
        trajectory = solve_heat(None, ConstantSource(1.0), None, 2.0, 400, grid5)
        steady = linalg.solve(laplacian_matrix(grid5), np.ones(grid5.n_interior))
        np.testing.assert_allclose(trajectory.final_state, steady, rtol=1e-8)

    def test_second_order_in_time(self, grid5):
        lam, mode = smallest_eigenpair(grid5)
        exact = math.exp(-lam * 0.1) * mode
        errors = [
            np.linalg.norm(solve_heat(None, ZERO, mode, 0.1, steps, grid5).final_state - exact)
            for steps in (20, 40)
        ]
        assert 3.8 <= errors[0] / errors[1] <= 4.2

    def test_dissipative(self, grid5, rng):
        trajectory = solve_heat(None, ZERO, rng.standard_normal(grid5.n_interior), 0.1, 100, grid5)
        norms = np.linalg.norm(trajectory.states, axis=1)
        assert np.all(np.diff(norms) <= 1e-14)

    def test_linear_in_data(self, grid5, rng):
        path = DeformationPath(grid5, 0.1, 3, rng.uniform(-0.3, 0.3, (3, 3)))
        a, b = rng.standard_normal(grid5.n_interior), rng.standard_normal(grid5.n_interior)
        sum_solve = solve_heat(path, ConstantSource(2.0), a + b, 0.1, 60, grid5)
        split = solve_heat(path, ConstantSource(2.0), a, 0.1, 60, grid5).states + solve_heat(
            path, ZERO, b, 0.1, 60, grid5
        ).states
        np.testing.assert_allclose(sum_solve.states, split, rtol=1e-10, atol=1e-12)

    def test_segment_alignment(self, grid5):
        """A path nonzero on the last segment only leaves the first segments untouched."""
        coeffs = np.zeros((3, 3))
        coeffs[:, 2] = 0.3
        path = DeformationPath(grid5, 0.1, 3, coeffs)
        perturbed = solve_heat(path, ConstantSource(1.0), None, 0.1, 300, grid5)
        reference = solve_heat(None, ConstantSource(1.0), None, 0.1, 300, grid5, K=3)
        assert perturbed.same_time_grid(reference)
        np.testing.assert_allclose(perturbed.states[:201], reference.states[:201], rtol=1e-12, atol=1e-15)
        assert not np.allclose(perturbed.final_state, reference.final_state)

    def test_rejects_inadmissible_path(self, grid5):
        path = DeformationPath(grid5, 0.1, 1, np.full((3, 1), 0.5))
        with pytest.raises(AdmissibilityError):
            solve_heat(path, ZERO, None, 0.1, 10, grid5)

    def test_rejects_mismatched_path(self, grid5):
        wave_path = DeformationPath.zeros(grid5, 0.1, 1, EquationKind.WAVE)
        with pytest.raises(ContractError):
            solve_heat(wave_path, ZERO, None, 0.1, 10, grid5)
        with pytest.raises(ContractError):
            solve_heat(DeformationPath.zeros(grid5, 0.2, 1), ZERO, None, 0.1, 10, grid5)

    def test_rejects_wrong_initial_shape(self, grid5):
        with pytest.raises(DomainError):
            solve_heat(None, ZERO, np.zeros(8), 0.1, 10, grid5)


class TestWaveSolver:
    """Test suite for solve_wave."""

    def test_at_rest_stays_zero(self, grid5):
        trajectory = solve_wave(None, ZERO, None, None, 1.0, 200, grid5)
        assert not np.any(trajectory.states)

    def test_eigenmode_period(self, grid5):
        """u0 = e₁ at rest returns after 2π/√λ₁."""
        lam, mode = smallest_eigenpair(grid5)
        period = 2.0 * math.pi / math.sqrt(lam)
        trajectory = solve_wave(None, ZERO, mode, None, period, 4000, grid5)
        np.testing.assert_allclose(trajectory.positions[-1], mode, atol=1e-3)
        np.testing.assert_allclose(trajectory.velocities[-1], 0.0, atol=1e-2)

    def test_energy_conserved(self, grid5):
        _, mode = smallest_eigenpair(grid5)
        trajectory = solve_wave(None, ZERO, mode, None, 1.0, 4000, grid5)
        assert trajectory.summary()["energy_max_relative_drift"] <= 1e-6

    def test_source_drives_velocity(self, wave_reference, grid5):
        """From rest, F ≡ 1 accelerates every node after the first step."""
        assert wave_reference.kind is EquationKind.WAVE
        assert wave_reference.states.shape[1] == 2 * grid5.n_interior
        assert np.all(wave_reference.velocities[1] > 0)

    def test_cfl_violation(self, grid5):
        """λ_max ≈ 109 limits dt to about 0.19."""
        with pytest.raises(CFLViolationError) as excinfo:
            solve_wave(None, ZERO, None, None, 2.0 * math.sqrt(2.0), 10, grid5)
        assert excinfo.value.dt_max == pytest.approx(2.0 / math.sqrt(1.01 * 109.2548), rel=1e-3)

    def test_rejects_fast_deformation(self, grid5):
        """Wave paths must move with |∂_t λ| < 1."""
        path = DeformationPath(grid5, 1.0, 4, np.full((3, 4), 0.3), EquationKind.WAVE)
        with pytest.raises(AdmissibilityError):
            solve_wave(path, ZERO, None, None, 1.0, 400, grid5)

    def test_deformed_solve_runs(self, grid5, rng):
        path = DeformationPath(grid5, 1.0, 4, rng.uniform(-0.1, 0.1, (3, 4)), EquationKind.WAVE)
        trajectory = solve_wave(path, ConstantSource(1.0), None, None, 1.0, 400, grid5)
        assert trajectory.path is path
        assert np.all(np.isfinite(trajectory.energy()))


class TestReferenceState:
    """Test suite for the unperturbed reference solve."""

    def test_heat_matches_solver(self, grid5):
        expected = solve_heat(None, ConstantSource(1.0), None, 0.1, 300, grid5)
        actual = reference_state("heat", ConstantSource(1.0), None, 0.1, 300, grid5)
        np.testing.assert_array_equal(actual.states, expected.states)

    def test_wave_matches_solver(self, grid5):
        _, mode = smallest_eigenpair(grid5)
        expected = solve_wave(None, ZERO, mode, None, 1.0, 2000, grid5)
        actual = reference_state(EquationKind.WAVE, ZERO, mode, 1.0, 2000, grid5)
        assert actual.kind is EquationKind.WAVE
        np.testing.assert_array_equal(actual.states, expected.states)

    def test_lambda_max_estimate(self, grid5):
        matrix = np.asarray(laplacian_matrix(grid5))
        assert estimate_lambda_max(matrix) == pytest.approx(linalg.eigvalsh(matrix)[-1], rel=1e-6)
        assert estimate_lambda_max(np.zeros((3, 3))) == 0.0


class TestSources:
    """Test suite for the source terms."""

    def test_constant(self, grid5):
        np.testing.assert_array_equal(ConstantSource(2.5).evaluate(0.3, grid5), np.full(9, 2.5))
        assert ConstantSource().is_zero

    def test_separable(self, grid5):
        source = SeparableSource(Expression("exp(-t)", ("t",)), lambda x, y: x + y)
        x, y = grid5.interior_coordinates()
        np.testing.assert_allclose(source.evaluate(1.0, grid5), math.exp(-1.0) * (x + y))
        assert source.to_dict()["time"] == "exp(-t)"

    def test_expression(self, grid5):
        source = ExpressionSource("t*sin(pi*x)*sin(pi*y)")
        values = source.evaluate(2.0, grid5)
        assert values[grid5.interior_index(2, 2)] == pytest.approx(2.0)

    def test_tabulated_interpolates(self, grid5):
        source = TabulatedSource(np.array([0.0, 1.0]), np.vstack([np.zeros(9), np.full(9, 4.0)]))
        np.testing.assert_allclose(source.evaluate(0.25, grid5), np.full(9, 1.0))
        with pytest.raises(DomainError):
            source.evaluate(1.5, grid5)

    def test_tabulated_validation(self):
        with pytest.raises(ConfigurationError):
            TabulatedSource(np.array([0.0, 0.0]), np.zeros((2, 9)))
        with pytest.raises(ConfigurationError):
            TabulatedSource(np.array([0.0, 1.0]), np.zeros((3, 9)))

    def test_non_finite_sample(self, grid5):
        source = SeparableSource(lambda t: math.inf, 1.0)
        with pytest.raises(ConfigurationError):
            source.sample(np.array([0.0, 1.0]), grid5)


class TestStateTrajectory:
    """Test suite for StateTrajectory."""

    def test_heat_dataframe(self, heat_reference):
        df = heat_reference.to_dataframe()
        assert list(df.columns[:4]) == ["t", "u_1_1", "u_1_2", "u_1_3"]
        assert df.shape == (301, 10)
        assert df["t"].iloc[-1] == pytest.approx(0.1)

    def test_wave_dataframe(self, wave_reference):
        columns = list(wave_reference.to_dataframe().columns)
        assert columns[10] == "v_1_1"
        assert len(columns) == 19

    def test_heat_has_no_velocity(self, heat_reference):
        with pytest.raises(ContractError):
            heat_reference.velocities

    def test_rejects_inconsistent_shapes(self, grid5):
        with pytest.raises(ContractError):
            StateTrajectory(grid5, np.array([0.0, 1.0]), np.zeros((2, 18)), EquationKind.HEAT)
        with pytest.raises(ContractError):
            StateTrajectory(grid5, np.array([0.0, 1.0]), np.zeros((3, 9)), EquationKind.HEAT)

    def test_summary(self, heat_reference):
        summary = heat_reference.summary()
        assert summary["kind"] == "heat"
        assert summary["steps"] == 300
        assert summary["final_l2_norm"] == pytest.approx(np.linalg.norm(heat_reference.final_state))
