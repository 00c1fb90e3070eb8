"""
Euler scheme in integral form, the mollified ladder, the CGP decomposition, the mixed
equation and the multiplicative-noise reduction.
"""
import math

import numpy as np
import pytest

from model.drift import ConstantFunction, DirichletDrift, DirichletTerm, FiniteSetApprox, SignDrift, SmoothDrift
from model.errors import DomainError, UnboundedDrift
from model.kernel import FbmVolterra
from model.path import SamplePath, TimeGrid
from model.solver import SolverConfig
from service import drift_service
from service.solver_service import integrate


def _noise_path(path_service, spec, grid, seed_tag=(5, 0)):
    increments = path_service.brownian_increments(grid, seed_tag)
    return path_service.volterra_path(spec, grid, increments, seed_tag)


class TestIntegrate:
    def test_zero_drift_is_shifted_noise(self, grid16, rng):
        noise = rng.standard_normal((3, 16))
        out = integrate(drift_service.smooth_drift('zero'), grid16, 0.25, noise)
        np.testing.assert_array_equal(out, 0.25 + noise)

    def test_constant_drift_adds_a_line(self, grid16):
        out = integrate(drift_service.smooth_drift('constant', value=2.0), grid16, 1.0, np.zeros((1, 16)))
        np.testing.assert_allclose(out[0], 1.0 + 2.0 * grid16.points, rtol=1e-13)

    def test_drift_sees_the_left_point(self):
        grid = TimeGrid(1.0, 2)
        # b(x) = -sign(x) with x0 = 0 contributes nothing on the first cell
        out = integrate(SignDrift(scale=-1.0), grid, 0.0, np.array([[1.0, 1.0]]))
        np.testing.assert_allclose(out[0], [1.0, 0.5])

    def test_per_path_initial_values(self, grid16):
        out = integrate(drift_service.smooth_drift('zero'), grid16, np.array([1.0, 2.0]), np.zeros((2, 16)))
        np.testing.assert_array_equal(out[:, -1], [1.0, 2.0])


class TestEulerSolve:
    def test_residual_vanishes(self, solver_service, path_service, grid32, rough_fbm):
        noise = _noise_path(path_service, rough_fbm, grid32)
        config = SolverConfig(grid32, 0.3, SignDrift(), rough_fbm)
        solution = solver_service.euler_solve(config, noise)
        assert solution.origin == 0.3
        assert solver_service.residual(solution, config, noise) < 1e-12

    def test_dirichlet_drift_leaves_the_noise_untouched(self, solver_service, path_service, grid32, smooth_fbm):
        """Off the rational set the drift vanishes, so X is exactly x0 + B^K."""
        drift = DirichletDrift([DirichletTerm(ConstantFunction(1.0), math.inf, FiniteSetApprox.rationals(4, 4))])
        x0 = math.sqrt(2.0) / 2.0
        noise = _noise_path(path_service, smooth_fbm, grid32)
        solution = solver_service.euler_solve(SolverConfig(grid32, x0, drift, smooth_fbm), noise)
        assert np.max(np.abs(solution.values - (x0 + noise.values))) == 0.0

    def test_ensemble_matches_single_paths(self, solver_service, path_service, grid16, smooth_fbm):
        noise = path_service.generate_ensemble(smooth_fbm, grid16, 6, 4)
        config = SolverConfig(grid16, 0.0, SignDrift(), smooth_fbm)
        solutions = solver_service.solve_ensemble(config, noise)
        single = solver_service.euler_solve(config, noise.path(2))
        np.testing.assert_allclose(solutions.values[2], single.values, atol=1e-14)
        np.testing.assert_array_equal(solutions.path_indices, noise.path_indices)

    def test_grid_mismatch(self, solver_service, path_service, grid16, grid32, rough_fbm):
        noise = _noise_path(path_service, rough_fbm, grid16)
        with pytest.raises(DomainError):
            solver_service.euler_solve(SolverConfig(grid32, 0.0, SignDrift()), noise)

    def test_config_needs_a_drift(self, grid16):
        with pytest.raises(DomainError):
            SolverConfig(grid16, 0.0, lambda t, x: x)

    def test_comparison_gap_is_one_step_scale(self, solver_service, path_service, grid32, rough_fbm):
        noise = _noise_path(path_service, rough_fbm, grid32, (11, 3))
        config = SolverConfig(grid32, 0.2, SignDrift(scale=-1.0), rough_fbm)
        # -sign(x) <= -sign(x - 1/2) everywhere and the lower drift is nonincreasing
        gap = solver_service.comparison_gap(SignDrift(scale=-1.0), SignDrift(scale=-1.0, shift=0.5), config, noise)
        assert 0.0 <= gap <= 2.0 * grid32.step + 1e-12


class TestLadder:
    def test_ladder_shapes(self, solver_service, path_service, grid32, rough_fbm):
        noise = _noise_path(path_service, rough_fbm, grid32)
        config = SolverConfig(grid32, 0.0, SignDrift(), rough_fbm)
        result = solver_service.approximation_solve(config, noise, [4, 16, 64])
        assert len(result.solutions) == 3
        assert len(result.trace) == 2
        assert result.path is result.solutions[-1]
        assert [row['next_level'] for row in result.to_rows()] == [16, 64]

    def test_ensemble_trace(self, solver_service, path_service, grid16, rough_fbm):
        noise = path_service.generate_ensemble(rough_fbm, grid16, 5, 2)
        config = SolverConfig(grid16, 0.0, SignDrift(), rough_fbm)
        solutions, trace = solver_service.approximation_ensemble(config, noise, [4, 16, 64, 256], "one_sided")
        assert len(solutions) == 4
        assert trace.shape == (5, 3)
        assert np.all(trace >= 0.0)

    @pytest.mark.parametrize("levels", [[4], [16, 4], [4, 4]])
    def test_levels_must_increase(self, solver_service, path_service, grid16, rough_fbm, levels):
        noise = _noise_path(path_service, rough_fbm, grid16)
        config = SolverConfig(grid16, 0.0, SignDrift(), rough_fbm)
        with pytest.raises(DomainError):
            solver_service.approximation_solve(config, noise, levels)


class TestCgp:
    def test_brownian_residual_is_the_increment(self, solver_service, path_service, grid16, brownian_rl):
        noise = path_service.generate_ensemble(brownian_rl, grid16, 8, 1)
        config = SolverConfig(grid16, 0.0, SignDrift(), brownian_rl)
        solutions = solver_service.solve_ensemble(config, noise)
        residuals = solver_service.cgp_residuals(solutions, noise, brownian_rl, 1.0, 0.25)
        expected = (noise.at(1.0) - noise.at(0.75)) / np.sqrt(0.25)
        np.testing.assert_allclose(residuals, expected, rtol=0.0, atol=1e-12)

    def test_single_path_decomposition(self, solver_service, path_service, grid16, smooth_fbm):
        noise = _noise_path(path_service, smooth_fbm, grid16)
        config = SolverConfig(grid16, 0.0, SignDrift(), smooth_fbm)
        solution = solver_service.euler_solve(config, noise)
        decomposition = solver_service.cgp_decompose(solution, noise, smooth_fbm, 1.0, 0.25)
        assert decomposition.y == pytest.approx(solution.at(0.75) + noise.at(1.0) - noise.at(0.75))
        assert decomposition.kappa_sq > 0.0

    def test_single_path_matches_the_ensemble(self, solver_service, path_service, grid16, smooth_fbm):
        noise = path_service.generate_ensemble(smooth_fbm, grid16, 6, 4)
        config = SolverConfig(grid16, 0.0, SignDrift(), smooth_fbm)
        solutions = solver_service.solve_ensemble(config, noise)
        residuals = solver_service.cgp_residuals(solutions, noise, smooth_fbm, 1.0, 0.25)
        decomposition = solver_service.cgp_decompose(solutions.path(2), noise.path(2), smooth_fbm, 1.0, 0.25)
        assert decomposition.standardized_residual == pytest.approx(residuals[2], abs=1e-10)

    def test_window_must_be_inside(self, solver_service, path_service, grid16, smooth_fbm):
        noise = path_service.generate_ensemble(smooth_fbm, grid16, 4, 1)
        with pytest.raises(DomainError):
            solver_service.cgp_residuals(noise, noise, smooth_fbm, 0.5, 0.5)

    def test_needs_driving_increments(self, solver_service, grid16, smooth_fbm):
        noise = SamplePath(grid16, np.zeros(16))
        with pytest.raises(DomainError):
            solver_service.cgp_decompose(noise, noise, smooth_fbm, 1.0, 0.25)

    @pytest.mark.slow
    def test_standardized_residuals_are_standard(self, solver_service, path_service, grid32, smooth_fbm):
        noise = path_service.generate_ensemble(smooth_fbm, grid32, 4000, 31)
        config = SolverConfig(grid32, 0.0, SignDrift(), smooth_fbm)
        solutions = solver_service.solve_ensemble(config, noise)
        residuals = solver_service.cgp_residuals(solutions, noise, smooth_fbm, 1.0, 0.25)
        assert abs(np.mean(residuals)) < 0.1
        assert 0.85 < np.var(residuals) < 1.15


class TestMixedEquation:
    def test_zero_drift_gap_is_scaled_stabilizer(self, solver_service, grid16):
        ensembles = solver_service.mixed_ensembles(
            drift_service.smooth_drift('zero'), 0.3, 0.75, [2, 4], grid16, 0.0, 20, 6
        )
        gap = ensembles[2].values - ensembles['reference'].values
        np.testing.assert_allclose(gap, 0.5 * ensembles['h1'].values, atol=1e-12)
        np.testing.assert_array_equal(ensembles[4].path_indices, ensembles['reference'].path_indices)

    def test_single_path_matches_ensemble(self, solver_service, grid16):
        drift = SignDrift()
        path, pair = solver_service.mixed_solve(drift, 0.3, 0.75, 4, grid16, 0.1, (6, 3))
        ensembles = solver_service.mixed_ensembles(drift, 0.3, 0.75, [4], grid16, 0.1, 4, 6)
        np.testing.assert_allclose(path.values, ensembles[4].values[3], atol=1e-12)
        reference = solver_service.reference_solve(drift, pair, 0.1)
        np.testing.assert_allclose(reference.values, ensembles['reference'].values[3], atol=1e-12)

    def test_unbounded_drift_is_rejected(self, solver_service, grid16):
        with pytest.raises(UnboundedDrift):
            solver_service.mixed_ensembles(drift_service.smooth_drift('linear'), 0.3, 0.75, [2], grid16, 0.0, 4, 1)

    def test_understated_lipschitz_constant_is_rejected(self, solver_service, grid16):
        steep = SmoothDrift(lambda t, x: np.tanh(4.0 * x), 1.0, 1.0, "steep_tanh")
        with pytest.raises(DomainError):
            solver_service.mixed_ensembles(steep, 0.3, 0.75, [2], grid16, 0.0, 4, 1)
        with pytest.raises(DomainError):
            solver_service.mixed_solve(steep, 0.3, 0.75, 2, grid16, 0.0, (1, 0))

    def test_stabilizing_coefficient(self, solver_service, grid16):
        with pytest.raises(DomainError):
            solver_service.mixed_solve_sigma(SignDrift(), 0.3, 0.75, 0.0, grid16, 0.0, (1, 0))
        path = solver_service.mixed_solve_sigma(drift_service.smooth_drift('zero'), 0.3, 0.75, 0.5, grid16, 0.0, (1, 0))
        expected, _ = solver_service.mixed_solve(drift_service.smooth_drift('zero'), 0.3, 0.75, 2, grid16, 0.0, (1, 0))
        np.testing.assert_allclose(path.values, expected.values, atol=1e-12)


class TestLamperti:
    def test_constant_sigma_scales_the_noise(self, solver_service, path_service, grid16, smooth_fbm):
        noise = _noise_path(path_service, smooth_fbm, grid16)
        solution = solver_service.lamperti_solve(
            lambda x: 2.0 + 0.0 * x, (2.0, 2.0), drift_service.smooth_drift('zero'), noise, 0.0
        )
        np.testing.assert_allclose(solution.values, 2.0 * noise.values, atol=1e-8)
        assert solution.origin == 0.0

    def test_unit_sigma_matches_additive_solver(self, solver_service, path_service, grid16, smooth_fbm):
        noise = _noise_path(path_service, smooth_fbm, grid16)
        drift = drift_service.smooth_drift('tanh')
        additive = solver_service.euler_solve(SolverConfig(grid16, 0.5, drift), noise)
        multiplicative = solver_service.lamperti_solve(lambda x: 1.0 + 0.0 * x, (1.0, 1.0), drift, noise, 0.5)
        np.testing.assert_allclose(multiplicative.values, additive.values, atol=1e-8)
