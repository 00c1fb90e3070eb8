"""
Euler solver in integral form, conditionally Gaussian decomposition, mollified-drift
ladder and the stabilized mixed equation.
"""
import logging
import numpy as np
from model.drift import DriftSpec
from model.errors import DomainError, UnboundedDrift
from model.kernel import FbmVolterra, KernelSpec, stabilized_mixture
from model.path import CorrelatedPair, Ensemble, SamplePath, TimeGrid
from model.solver import ApproximationResult, CgpDecomposition, SolverConfig
from service import drift_service, kernel_service
from service.path_service import PathService
import config.app_settings as APP_SETTINGS


def integrate(drift: DriftSpec, grid: TimeGrid, x0, noise: np.ndarray) -> np.ndarray:
    """
    X_{t_i} = x0 + B_{t_i} + sum_{j<i} b(t_j, X_{t_j}) Delta with t_0 = 0 and X_{t_0} = x0.

    Args:
        drift (DriftSpec): drift b
        grid (TimeGrid): grid
        x0 (float | np.ndarray): initial value, scalar or one per row
        noise (np.ndarray): noise values, shape (paths, n_points)

    Returns:
        np.ndarray: solution values with the shape of noise
    """
    noise = np.atleast_2d(noise)
    start = np.broadcast_to(np.asarray(x0, dtype=float), (noise.shape[0],))
    times = grid.with_origin()
    out = np.empty_like(noise)
    state = start.copy()
    accumulated = np.zeros(noise.shape[0])
    for i in range(grid.n_points):
        accumulated = accumulated + drift.evaluate(times[i], state) * grid.step
        state = start + noise[:, i] + accumulated
        out[:, i] = state
    return out


class SolverService:
    """
    Solves dX = b(t, X) dt + dB^K_t on a grid and the derived schemes.

    Attributes:
        path_service (PathService): source of the discretized kernels and noise ensembles
        logger (logging.Logger): logger for this class
    """
    def __init__(self, path_service: PathService = None):
        self.path_service = path_service or PathService()
        self.logger = logging.getLogger(__name__)

    def euler_solve(self, config: SolverConfig, noise_path: SamplePath) -> SamplePath:
        """
        Left-rectangle Euler scheme along one noise path.

        Args:
            config (SolverConfig): grid, x0 and drift
            noise_path (SamplePath): B^K on the same grid

        Returns:
            SamplePath: X with origin x0
        """
        if noise_path.grid != config.grid:
            raise DomainError("noise path and solver grid differ")
        values = integrate(config.drift, config.grid, config.x0, noise_path.values[None, :])[0]
        return SamplePath(config.grid, values, noise_path.driving_increments, noise_path.seed_tag, config.x0)

    def solve_ensemble(self, config: SolverConfig, noise: Ensemble) -> Ensemble:
        """
        Euler scheme applied row-wise to an ensemble of noise paths.

        Returns:
            Ensemble: solutions sharing the seeds of the noise
        """
        if noise.grid != config.grid:
            raise DomainError("noise ensemble and solver grid differ")
        return noise.derive(integrate(config.drift, config.grid, config.x0, noise.values), origin=config.x0)

    def residual(self, solution: SamplePath, config: SolverConfig, noise_path: SamplePath) -> float:
        """
        max_i |X_{t_i} - x0 - sum_{j<i} b(t_j, X_{t_j}) Delta - B_{t_i}|.

        Returns:
            float: consistency residual of the integral form
        """
        if solution.grid != config.grid or noise_path.grid != config.grid:
            raise DomainError("residual needs aligned grids")
        states = np.concatenate(([config.x0], solution.values[:-1]))
        drift_values = config.drift.evaluate(config.grid.with_origin()[:-1], states)
        integral = np.cumsum(drift_values * config.grid.step)
        return float(np.max(np.abs(solution.values - config.x0 - integral - noise_path.values)))

    #-------------------------------------
    # Mollified-drift ladder
    #-------------------------------------
    def approximation_solve(self, config: SolverConfig, noise_path: SamplePath, levels: list = None,
                            shape: str = "symmetric", quad_points: int = None) -> ApproximationResult:
        """
        Solve with mollify(drift, n_j) for each level on the same noise path.

        Args:
            config (SolverConfig): configuration with the target drift
            noise_path (SamplePath): shared noise
            levels (list): increasing mollification indices
            shape (str): mollifier shape
            quad_points (int): mollifier nodes

        Returns:
            ApproximationResult: finest solution plus the sup-distance trace
        """
        levels = _check_levels(levels)
        solutions = [
            self.euler_solve(config.with_drift(drift_service.mollify(config.drift, n, quad_points, shape)), noise_path)
            for n in levels
        ]
        trace = [
            float(np.max(np.abs(a.values - b.values)))
            for a, b in zip(solutions, solutions[1:])
        ]
        return ApproximationResult(solutions[-1], levels, trace, solutions)

    def approximation_ensemble(self, config: SolverConfig, noise: Ensemble, levels: list = None,
                               shape: str = "symmetric", quad_points: int = None) -> tuple:
        """
        Ladder over a whole ensemble.

        Returns:
            tuple: (list of Ensemble per level, trace array of shape (n_paths, len(levels) - 1))
        """
        levels = _check_levels(levels)
        solutions = [
            self.solve_ensemble(config.with_drift(drift_service.mollify(config.drift, n, quad_points, shape)), noise)
            for n in levels
        ]
        trace = np.column_stack([
            np.max(np.abs(a.values - b.values), axis=1) for a, b in zip(solutions, solutions[1:])
        ])
        self.logger.info(f"Ladder {levels} ({shape}) solved on {noise.n_paths} paths")
        return solutions, trace

    #-------------------------------------
    # Conditionally Gaussian decomposition
    #-------------------------------------
    def cgp_decompose(self, solution: SamplePath, noise_path: SamplePath, spec: KernelSpec, t: float,
                      epsilon: float) -> CgpDecomposition:
        """
        Y = X_{t-eps} + (B_t - B_{t-eps}) with conditional mean xi and variance kappa_eps^2.

        xi uses the discretized kernel of the path generator, so Y - xi is exactly the
        diagonal-window part of the discrete stochastic integral.

        Args:
            solution (SamplePath): X
            noise_path (SamplePath): B^K with its driving increments
            spec (KernelSpec): kernel that produced the noise
            t (float): grid time
            epsilon (float): look-back with t - epsilon on the grid

        Returns:
            CgpDecomposition: the decomposition at (t, epsilon)
        """
        rows = self._cgp_rows(solution.with_origin()[None, :], noise_path, spec, t, epsilon)
        y, xi, kappa_sq = rows
        return CgpDecomposition(t, epsilon, float(y[0]), float(xi[0]), kappa_sq)

    def cgp_residuals(self, solutions: Ensemble, noise: Ensemble, spec: KernelSpec, t: float,
                      epsilon: float) -> np.ndarray:
        """Standardized residuals (Y - xi) / kappa_eps over an ensemble."""
        y, xi, kappa_sq = self._cgp_rows(solutions.with_origin(), noise, spec, t, epsilon)
        return (y - xi) / np.sqrt(kappa_sq)

    def _cgp_rows(self, solution_values: np.ndarray, noise, spec: KernelSpec, t: float, epsilon: float) -> tuple:
        grid = noise.grid
        if not 0.0 < epsilon < t:
            raise DomainError(f"CGP window needs 0 < eps < t, got eps={epsilon}, t={t}")
        i = grid.index_of(t)
        k = grid.index_of(t - epsilon)
        increments = noise.increments if isinstance(noise, Ensemble) else noise.driving_increments
        if increments is None:
            raise DomainError("the CGP decomposition needs the driving increments of the noise")
        increments = np.atleast_2d(increments)
        noise_values = np.atleast_2d(noise.values)

        # solution_values carries the origin column, grid index i sits at column i + 1
        past = solution_values[:, k + 1]
        y = past + (noise_values[:, i] - noise_values[:, k])
        if PathService._constant_kernel(spec) is not None:
            xi = past.copy()
        else:
            matrix = self.path_service.discretized_kernel(spec, grid)
            correction = matrix[i, :k + 1] - matrix[k, :k + 1]
            xi = past + increments[:, :k + 1] @ correction
        kappa_sq = kernel_service.local_variance(spec, t, epsilon).value
        return y, xi, kappa_sq

    #-------------------------------------
    # Stabilized mixed equation
    #-------------------------------------
    def mixed_solve(self, drift: DriftSpec, h1: float, h2: float, n: int, grid: TimeGrid, x0: float,
                    seed_tag: tuple, check_ranges: bool = True) -> tuple:
        """
        X^N = x0 + int b(s, X^N) ds + (1/N) B^{H1} + B^{H2} along one seed.

        Returns:
            tuple: (X^N path, CorrelatedPair) so the N = infinity reference reuses the randomness
        """
        pair = self.path_service.correlated_mixture(h1, h2, n, grid, seed_tag, check_ranges)
        self._check_conditions(drift, grid, x0)
        config = SolverConfig(grid, x0, drift, stabilized_mixture(h1, h2, n, grid.horizon))
        return self.euler_solve(config, pair.mixture), pair

    def mixed_solve_sigma(self, drift: DriftSpec, h1: float, h2: float, sigma: float, grid: TimeGrid, x0: float,
                          seed_tag: tuple, check_ranges: bool = True) -> SamplePath:
        """Mixed equation with an arbitrary stabilizing coefficient sigma > 0 in front of B^{H1}."""
        if not sigma > 0.0:
            raise DomainError(f"stabilizing coefficient must be positive, got {sigma}")
        pair = self.path_service.correlated_mixture(h1, h2, 1, grid, seed_tag, check_ranges)
        self._check_conditions(drift, grid, x0)
        noise = SamplePath(grid, sigma * pair.path_h1.values + pair.path_h2.values,
                           pair.path_h2.driving_increments, seed_tag)
        return self.euler_solve(SolverConfig(grid, x0, drift), noise)

    def reference_solve(self, drift: DriftSpec, pair: CorrelatedPair, x0: float) -> SamplePath:
        """The N = infinity member, driven by the B^{H2} component alone."""
        grid = pair.path_h2.grid
        config = SolverConfig(grid, x0, drift)
        return self.euler_solve(config, pair.path_h2)

    def mixed_ensembles(self, drift: DriftSpec, h1: float, h2: float, ns: list, grid: TimeGrid, x0: float,
                        n_paths: int, master_seed: int, check_ranges: bool = True, config_hash: str = "") -> dict:
        """
        Shared-seed ensembles of X^N for every N and of the reference X^infinity.

        Returns:
            dict: 'h1', 'h2', 'reference' and N -> Ensemble
        """
        self._check_conditions(drift, grid, x0)
        ensemble_h1, ensemble_h2 = self.path_service.correlated_ensembles(
            h1, h2, grid, n_paths, master_seed, check_ranges, config_hash
        )
        config = SolverConfig(grid, x0, drift, FbmVolterra(h2, grid.horizon))
        result = {'h1': ensemble_h1, 'h2': ensemble_h2, 'reference': self.solve_ensemble(config, ensemble_h2)}
        for n in ns:
            if int(n) != n or n < 1:
                raise DomainError(f"stabilization index N must be a positive integer, got {n}")
            mixture = ensemble_h2.derive((1.0 / n) * ensemble_h1.values + ensemble_h2.values)
            result[n] = self.solve_ensemble(config, mixture)
        self.logger.info(f"Mixed equation solved for N in {list(ns)} on {n_paths} shared-seed paths")
        return result

    def _check_conditions(self, drift: DriftSpec, grid: TimeGrid, x0: float):
        x_samples = np.linspace(x0 - 10.0, x0 + 10.0, 401)
        t_samples = grid.with_origin()[::max(1, grid.n_points // 16)]
        if not drift_service.check_bounded(drift, t_samples, x_samples):
            self.logger.error(f"{drift.kind} drift fails the boundedness condition")
            raise UnboundedDrift(f"{drift.kind} drift is not bounded in x uniformly in t")

        # (B2) can only be swept for drifts that declare their Lipschitz constant
        lipschitz = getattr(drift, 'lipschitz', None)
        if lipschitz is not None and not drift_service.check_piecewise_lipschitz(drift, lipschitz, t_samples, x_samples):
            self.logger.error(f"{drift.kind} drift exceeds its declared Lipschitz constant {lipschitz}")
            raise DomainError(f"{drift.kind} drift is not Lipschitz with constant {lipschitz} between its breakpoints")

    #-------------------------------------
    # Multiplicative noise and comparison
    #-------------------------------------
    def lamperti_solve(self, sigma, sigma_bounds: tuple, drift: DriftSpec, noise_path: SamplePath, x0: float,
                       working_range: tuple = (-50.0, 50.0)) -> SamplePath:
        """
        Solve dX = b dt + sigma(X) dB^K through the additive equation of Y = F(X).

        Returns:
            SamplePath: X = F^{-1}(Y)
        """
        forward, inverse, transformed = drift_service.lamperti_transform(sigma, sigma_bounds, drift, working_range)
        y0 = float(forward(np.asarray(x0)))
        config = SolverConfig(noise_path.grid, y0, transformed)
        y = self.euler_solve(config, noise_path)
        return SamplePath(noise_path.grid, inverse(y.values), noise_path.driving_increments, noise_path.seed_tag, x0)

    def comparison_gap(self, drift_low: DriftSpec, drift_high: DriftSpec, config: SolverConfig,
                       noise_path: SamplePath) -> float:
        """
        max_i (X^low_{t_i} - X^high_{t_i}), positive part; at most O(Delta) for nonincreasing b_low <= b_high.
        """
        low = self.euler_solve(config.with_drift(drift_low), noise_path)
        high = self.euler_solve(config.with_drift(drift_high), noise_path)
        return float(max(0.0, np.max(low.values - high.values)))


def _check_levels(levels) -> list:
    levels = list(levels or APP_SETTINGS.LADDER_LEVELS)
    if len(levels) < 2 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError(f"the ladder needs at least two increasing levels, got {levels}")
    return levels
