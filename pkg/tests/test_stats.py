"""
Monte Carlo estimators, slope fits, Besov norms and the convergence study.
"""
import math

import numpy as np
import pytest

from model.drift import FiniteSetApprox, Interval
from model.errors import DomainError, InsufficientSamples, MismatchedEnsembles
from model.path import Ensemble, SamplePath, TimeGrid
from service import drift_service, stats_service


def _line_ensemble(n_points: int) -> Ensemble:
    grid = TimeGrid(1.0, n_points)
    return Ensemble(grid, grid.points[None, :], 0)


class TestBasics:
    def test_fit_slope_of_power_law(self):
        xs = np.array([1.0, 2.0, 4.0, 8.0])
        fit = stats_service.fit_slope(xs, 3.0 * xs ** 0.5)
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_fit_slope_needs_three_points(self):
        with pytest.raises(InsufficientSamples):
            stats_service.fit_slope([1.0, 2.0], [1.0, 2.0])

    def test_mean_report(self):
        report = stats_service.mean_report([1.0, 2.0, 3.0, 4.0], seed=5)
        assert report.estimate == 2.5
        assert report.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
        lo, hi = report.ci95
        assert lo < 2.5 < hi
        assert report.to_dict()['seed'] == 5

    def test_mean_report_needs_two_samples(self):
        with pytest.raises(InsufficientSamples):
            stats_service.mean_report([1.0], seed=0)

    def test_product_moment_shapes(self):
        with pytest.raises(MismatchedEnsembles):
            stats_service.product_moment(np.zeros(3), np.zeros(4), seed=0)

    def test_centering_of_constant_ensemble(self, grid16):
        assert stats_service.centering_statistic(Ensemble(grid16, np.zeros((5, 16)), 0)) == 0.0


class TestSmallBall:
    def test_uniform_samples_have_unit_slope(self, rng):
        grid = TimeGrid(1.0, 2)
        ensemble = Ensemble(grid, rng.uniform(0.0, 1.0, size=(20_000, 2)), 1)
        reports, fit = stats_service.small_ball_probability(ensemble, 1.0, 0.0, [0.5, 0.25, 0.125, 0.0625])
        assert fit.slope == pytest.approx(1.0, abs=0.06)
        for report in reports:
            assert report.estimate == pytest.approx(report.extras['alpha'], abs=0.02)

    def test_nested_balls_are_monotone(self, rng):
        ensemble = Ensemble(TimeGrid(1.0, 2), rng.standard_normal((5000, 2)), 1)
        reports, _ = stats_service.small_ball_probability(ensemble, 1.0, 0.0, [0.5, 0.25, 0.125, 0.0625])
        hits = [report.extras['hits'] for report in reports]
        estimates = [report.estimate for report in reports]
        assert all(b <= a for a, b in zip(hits, hits[1:]))
        assert all(b <= a for a, b in zip(estimates, estimates[1:]))

    def test_bound_ratios(self, rng):
        grid = TimeGrid(1.0, 2)
        ensemble = Ensemble(grid, rng.uniform(0.0, 1.0, size=(5000, 2)), 1)
        reports, _ = stats_service.small_ball_probability(ensemble, 1.0, 0.0, [0.5, 0.25, 0.125])
        ratios = stats_service.occupation_bound_ratios(reports, 1.0, 0.3)
        for report, ratio in zip(reports, ratios):
            assert ratio == pytest.approx(report.estimate / report.extras['alpha'] ** 0.7)

    def test_too_few_hits(self, rng):
        grid = TimeGrid(1.0, 2)
        ensemble = Ensemble(grid, rng.uniform(0.0, 1.0, size=(100, 2)), 1)
        with pytest.raises(InsufficientSamples):
            stats_service.small_ball_probability(ensemble, 1.0, 0.0, [1e-3, 5e-4, 2.5e-4])

    def test_widths_must_decrease(self, rng):
        ensemble = Ensemble(TimeGrid(1.0, 2), rng.uniform(size=(100, 2)), 1)
        with pytest.raises(DomainError):
            stats_service.small_ball_probability(ensemble, 1.0, 0.0, [0.1, 0.2, 0.05])

    def test_gaussian_band(self):
        assert stats_service.gaussian_band_probability(1.0, -1.0, 2.0) == pytest.approx(0.6826894921, rel=1e-9)


class TestOccupation:
    def test_path_occupation(self):
        grid = TimeGrid(1.0, 4)
        path = SamplePath(grid, [0.5, 1.5, -0.1, 0.2])
        assert stats_service.occupation_time(path, Interval(0.0, 1.0)) == 0.5

    def test_ensemble_occupation_of_finite_set(self):
        grid = TimeGrid(1.0, 4)
        ensemble = Ensemble(grid, [[0.5, 0.5, 0.2, 0.0], [0.3, 0.3, 0.3, 0.3]], 0)
        times = stats_service.occupation_times(ensemble, FiniteSetApprox([0.0, 0.5]))
        np.testing.assert_allclose(times, [0.75, 0.0])

    def test_additive_over_an_interval_partition(self, rng):
        grid = TimeGrid(1.0, 64)
        path = SamplePath(grid, rng.standard_normal(64))
        left = stats_service.occupation_time(path, Interval(-1.0, 0.0))
        right = stats_service.occupation_time(path, Interval(0.0, 0.5))
        assert left + right == pytest.approx(stats_service.occupation_time(path, Interval(-1.0, 0.5)), abs=1e-15)

        ensemble = Ensemble(grid, rng.standard_normal((10, 64)), 0)
        pieces = [stats_service.occupation_times(ensemble, Interval(lo, hi)) for lo, hi in ((-2.0, 0.3), (0.3, 2.0))]
        np.testing.assert_allclose(pieces[0] + pieces[1], stats_service.occupation_times(ensemble, Interval(-2.0, 2.0)),
                                   atol=1e-15)

    def test_krylov_functional_of_constant(self):
        grid = TimeGrid(1.0, 8)
        ensemble = Ensemble(grid, np.zeros((4, 8)), 2)
        report = stats_service.krylov_functional(lambda t, x: np.ones_like(x), 2.0, 0.3, (0.0, 1.0), ensemble)
        assert report.estimate == pytest.approx(1.0)
        assert report.extras['lq_norm'] == pytest.approx(1.0, rel=1e-12)

    def test_krylov_exponent(self):
        ensemble = Ensemble(TimeGrid(1.0, 4), np.zeros((2, 4)), 0)
        with pytest.raises(DomainError):
            stats_service.krylov_functional(lambda t, x: x, 1.2, 0.3, (0.0, 1.0), ensemble)


class TestBesov:
    def test_linear_oracle(self):
        estimate = stats_service.besov_norm(_line_ensemble(1024), 0.5)
        # the exact value is 5; the grid sum gives 1 + (2 + sum_{k=2}^{1024} k^{-1/2})^2 / 1024
        assert estimate.norm_value == pytest.approx(4.9446, abs=5e-4)
        assert abs(estimate.norm_value - 5.0) / 5.0 < 0.02
        assert not estimate.grid_bias_note

    def test_excluding_the_last_cell_is_a_lower_bound(self):
        ensemble = _line_ensemble(256)
        excluded = stats_service.besov_norm(ensemble, 0.5, last_cell="exclude")
        assert excluded.grid_bias_note
        assert excluded.norm_value < stats_service.besov_norm(ensemble, 0.5).norm_value

    def test_last_cell_policies_on_the_linear_oracle(self):
        """Dropping the s -> t cell costs about 6% on the oracle, so only interpolation meets a 2% bound."""
        ensemble = _line_ensemble(1024)
        interpolated = stats_service.besov_norm(ensemble, 0.5).norm_value
        excluded = stats_service.besov_norm(ensemble, 0.5, last_cell="exclude").norm_value
        assert interpolated == pytest.approx(4.9446, abs=5e-4)
        assert excluded == pytest.approx(4.7002, abs=5e-4)
        assert abs(excluded - 5.0) / 5.0 > 0.02

    @pytest.mark.parametrize("last_cell", ["interpolate", "exclude"])
    def test_scales_quadratically(self, rng, last_cell):
        grid = TimeGrid(1.0, 32)
        ensemble = Ensemble(grid, np.cumsum(rng.standard_normal((8, 32)), axis=1) / math.sqrt(32), 0)
        scaled = ensemble.derive(3.0 * ensemble.values)
        base = stats_service.besov_norm(ensemble, 0.3, last_cell=last_cell).norm_value
        assert stats_service.besov_norm(scaled, 0.3, last_cell=last_cell).norm_value == pytest.approx(9.0 * base,
                                                                                                      rel=1e-12)

    def test_zero_paths(self, grid16):
        assert stats_service.besov_norm(Ensemble(grid16, np.zeros((3, 16)), 0), 0.3).norm_value == 0.0

    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_beta_range(self, beta):
        with pytest.raises(DomainError):
            stats_service.besov_norm(_line_ensemble(8), beta)

    def test_unknown_policy(self):
        with pytest.raises(DomainError):
            stats_service.besov_norm(_line_ensemble(8), 0.5, last_cell="extrapolate")


class TestDistances:
    def test_l2_distance(self, grid16):
        a = Ensemble(grid16, np.ones((4, 16)), 3)
        b = Ensemble(grid16, np.zeros((4, 16)), 3)
        assert stats_service.l2_distance(a, b, 1.0).estimate == 1.0
        difference = stats_service.difference(a, b)
        np.testing.assert_array_equal(difference.values, np.ones((4, 16)))

    def test_root_distance_satisfies_the_triangle_inequality(self, rng, grid16):
        a, b, c = (Ensemble(grid16, rng.standard_normal((50, 16)), 9) for _ in range(3))
        ab = math.sqrt(stats_service.l2_distance(a, b, 1.0).estimate)
        bc = math.sqrt(stats_service.l2_distance(b, c, 1.0).estimate)
        ac = math.sqrt(stats_service.l2_distance(a, c, 1.0).estimate)
        assert ac <= ab + bc + 1e-12

    def test_unpaired_seeds(self, grid16):
        a = Ensemble(grid16, np.ones((4, 16)), 3)
        with pytest.raises(MismatchedEnsembles):
            stats_service.l2_distance(a, Ensemble(grid16, np.ones((4, 16)), 4), 1.0)

    def test_holder_statistic_is_the_mean_pathwise_max(self):
        grid = TimeGrid(1.0, 8)
        first = Ensemble(grid, np.vstack([grid.points, 3.0 * grid.points]), 5)
        second = Ensemble(grid, np.vstack([2.0 * grid.points, grid.points]), 5)
        assert stats_service.holder_statistic(first, second, 0.5) == pytest.approx(2.5)

    def test_different_grids(self, grid16, grid32):
        a = Ensemble(grid16, np.ones((4, 16)), 3)
        with pytest.raises(MismatchedEnsembles):
            stats_service.l2_distance(a, Ensemble(grid32, np.ones((4, 32)), 3), 1.0)


class TestConvergenceStudy:
    def test_zero_drift_identity(self, solver_service, grid16):
        ns = [2, 4, 8]
        ensembles = solver_service.mixed_ensembles(drift_service.smooth_drift('zero'), 0.3, 0.75, ns, grid16,
                                                   0.0, 50, 12)
        rows, fit = stats_service.convergence_study(ensembles, ns, 0.2, 0.3)
        scaled = [row['l2'] * row['n'] ** 2 for row in rows]
        assert max(scaled) - min(scaled) <= 1e-9 * max(scaled)
        assert fit.slope == pytest.approx(-2.0, abs=1e-6)
        besov = [row['besov'] for row in rows]
        assert besov[0] > besov[1] > besov[2]
        assert rows[0]['holder_modulus'] > 0.0

    def test_parameter_checks(self, solver_service, grid16):
        ensembles = solver_service.mixed_ensembles(drift_service.smooth_drift('zero'), 0.3, 0.75, [2, 4], grid16,
                                                   0.0, 10, 12)
        with pytest.raises(DomainError):
            stats_service.convergence_study(ensembles, [4, 2], 0.2, 0.3)
        with pytest.raises(DomainError):
            stats_service.convergence_study(ensembles, [2, 4], 0.3, 0.3)


class TestNormality:
    def test_standard_normal(self, rng):
        report = stats_service.normality_check(rng.standard_normal(5000))
        assert abs(report.mean.value) < 0.1
        assert 0.9 < report.variance.value < 1.1
        assert abs(report.skewness.value) < 0.2
        assert abs(report.excess_kurtosis.value) < 0.3
        assert report.excess_kurtosis.std_error > 0.0
        assert not report.undefined_shape

    def test_uniform_sample_is_flagged(self, rng):
        report = stats_service.normality_check(rng.uniform(0.0, 1.0, 10_000))
        assert report.variance.value == pytest.approx(1.0 / 12.0, rel=0.05)
        assert report.excess_kurtosis.value == pytest.approx(-1.2, abs=0.06)
        assert abs(report.excess_kurtosis.value) > 20.0 * report.excess_kurtosis.std_error

    def test_constant_sample_has_no_shape(self):
        report = stats_service.normality_check(np.ones(200))
        assert report.variance.value == 0.0
        assert report.undefined_shape
        assert report.to_dict()['skewness'] is None

    def test_needs_enough_samples(self, rng):
        with pytest.raises(InsufficientSamples):
            stats_service.normality_check(rng.standard_normal(50))
