"""
Sample paths of Brownian motion, Volterra processes and completely correlated fBm mixtures.
"""
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
import numpy as np
from model.errors import DomainError
from model.kernel import FbmVolterra, KernelSpec
from model.path import CorrelatedFamily, CorrelatedPair, Ensemble, SamplePath, TimeGrid
from service import kernel_service
from utils.numerics.rng import EXACT_STREAM, INCREMENT_STREAM, path_generator
import config.app_settings as APP_SETTINGS


class PathService:
    """
    Generates reproducible sample paths and ensembles.

    The discretized kernel of every (kernel, grid) pair is computed once and then shared
    read-only by all workers.

    Attributes:
        threads (int): size of the worker pool used for ensembles
        chunk_size (int): paths per work item; fixed so results never depend on threads
        logger (logging.Logger): logger for this class
    """
    def __init__(self, threads: int = None, chunk_size: int = None):
        self.threads = max(1, int(threads or 1))
        self.chunk_size = int(chunk_size or APP_SETTINGS.PATH_CHUNK_SIZE)
        self.logger = logging.getLogger(__name__)
        self._kernel_cache = {}
        self._factor_cache = {}
        self._lock = threading.Lock()

    #-------------------------------------
    # Discretization
    #-------------------------------------
    def discretized_kernel(self, spec: KernelSpec, grid: TimeGrid) -> np.ndarray:
        """
        Lower-triangular matrix K_bar with K_bar[i, j] the weight of Delta W_j in B_{t_i}.

        Interior cells use the kernel at the cell midpoint; the diagonal cell uses
        sign * sqrt((1/Delta) int_{t_{i-1}}^{t_i} K(t_i, s)^2 ds).

        Args:
            spec (KernelSpec): kernel
            grid (TimeGrid): grid

        Returns:
            np.ndarray: read-only (n, n) matrix
        """
        key = (spec.key(), grid.key())
        with self._lock:
            cached = self._kernel_cache.get(key)
        if cached is not None:
            return cached

        n = grid.n_points
        matrix = np.zeros((n, n))
        constant = self._constant_kernel(spec)
        if constant is not None:
            matrix[np.tril_indices(n)] = constant
        else:
            rows, cols = np.tril_indices(n, -1)
            matrix[rows, cols] = kernel_service.kernel_values(spec, grid.points[rows], grid.midpoints[cols])
            cell_starts = grid.with_origin()[:-1]
            for i in range(n):
                window = grid.points[i] - cell_starts[i]
                variance = kernel_service.local_variance(spec, grid.points[i], window).value
                matrix[i, i] = self._signed_root(spec, grid, i, i, variance)
                if i > 0:
                    # the kernel can blow up at s = 0 as well, so the first cell is L2-exact too
                    variance = kernel_service.cross_integral(spec, grid.points[i], spec, grid.points[i],
                                                             0.0, grid.points[0])[0]
                    matrix[i, 0] = self._signed_root(spec, grid, i, 0, variance)
        matrix.setflags(write=False)

        with self._lock:
            self._kernel_cache[key] = matrix
        self.logger.info(f"Discretized {spec!r} on {n} points")
        return matrix

    @staticmethod
    def _signed_root(spec: KernelSpec, grid: TimeGrid, row: int, cell: int, variance: float) -> float:
        """sign(K at the cell midpoint) * sqrt(variance / Delta)."""
        sign = math.copysign(1.0, kernel_service.kernel_eval(spec, grid.points[row], grid.midpoints[cell]))
        return sign * math.sqrt(max(variance, 0.0) / grid.step)

    @staticmethod
    def _constant_kernel(spec: KernelSpec):
        """Total weight when every component is the Brownian kernel (H = 1/2), else None."""
        components = spec.components()
        if all(leaf.hurst == 0.5 for _, leaf in components):
            return sum(weight for weight, _ in components)
        return None

    def _apply_kernel(self, spec: KernelSpec, grid: TimeGrid, increments: np.ndarray) -> np.ndarray:
        constant = self._constant_kernel(spec)
        if constant is not None:
            return constant * np.cumsum(increments, axis=-1)
        return increments @ self.discretized_kernel(spec, grid).T

    #-------------------------------------
    # Single paths
    #-------------------------------------
    def brownian_increments(self, grid: TimeGrid, seed_tag: tuple) -> np.ndarray:
        """
        Independent Normal(0, Delta) draws from the stream of seed_tag = (master_seed, path_index).

        Args:
            grid (TimeGrid): grid whose cells receive one increment each
            seed_tag (tuple): (master_seed, path_index)

        Returns:
            np.ndarray: one increment per cell
        """
        master_seed, path_index = seed_tag
        generator = path_generator(master_seed, path_index, INCREMENT_STREAM)
        return math.sqrt(grid.step) * generator.standard_normal(grid.n_points)

    def volterra_path(self, spec: KernelSpec, grid: TimeGrid, increments, seed_tag: tuple = None) -> SamplePath:
        """
        Discretized B^K_{t_i} = sum_{j <= i} K_bar(t_i, cell_j) Delta W_j.

        Args:
            spec (KernelSpec): kernel
            grid (TimeGrid): grid
            increments (array_like): one Brownian increment per cell
            seed_tag (tuple): provenance of the increments

        Returns:
            SamplePath: the path with its driving increments
        """
        increments = np.asarray(increments, dtype=float)
        if increments.shape != (grid.n_points,):
            raise DomainError(f"{increments.size} increments for a grid of {grid.n_points} cells")
        return SamplePath(grid, self._apply_kernel(spec, grid, increments), increments, seed_tag)

    def exact_gaussian_path(self, spec: KernelSpec, grid: TimeGrid, seed_tag: tuple) -> SamplePath:
        """
        Exact sample L z with L the Cholesky factor of the grid covariance.

        Args:
            spec (KernelSpec): kernel
            grid (TimeGrid): grid
            seed_tag (tuple): (master_seed, path_index)

        Returns:
            SamplePath: path without driving increments
        """
        factor = self._cholesky(spec, grid)
        master_seed, path_index = seed_tag
        z = path_generator(master_seed, path_index, EXACT_STREAM).standard_normal(grid.n_points)
        return SamplePath(grid, factor @ z, None, seed_tag)

    def _cholesky(self, spec: KernelSpec, grid: TimeGrid) -> np.ndarray:
        key = (spec.key(), grid.key())
        with self._lock:
            cached = self._factor_cache.get(key)
        if cached is None:
            covariance = kernel_service.covariance_matrix(spec, grid, threads=self.threads)
            cached = kernel_service.cholesky_factor(covariance)
            cached.setflags(write=False)
            with self._lock:
                self._factor_cache[key] = cached
        return cached

    def correlated_mixture(self, h1: float, h2: float, n: int, grid: TimeGrid, seed_tag: tuple,
                           check_ranges: bool = True) -> CorrelatedPair:
        """
        Completely correlated B^{H1}, B^{H2} and their mixture (1/N) B^{H1} + B^{H2}.

        Args:
            h1 (float): stabilizing Hurst index in (0, 1/2]
            h2 (float): main Hurst index in (1/2, 1)
            n (int): stabilization index N >= 1
            grid (TimeGrid): grid
            seed_tag (tuple): (master_seed, path_index)
            check_ranges (bool): enforce the Hurst ranges above

        Returns:
            CorrelatedPair: the three paths built from one increment vector
        """
        _check_mixture_parameters(h1, h2, n, check_ranges)
        increments = self.brownian_increments(grid, seed_tag)
        path_h1 = self.volterra_path(FbmVolterra(h1, grid.horizon), grid, increments, seed_tag)
        path_h2 = self.volterra_path(FbmVolterra(h2, grid.horizon), grid, increments, seed_tag)
        return CorrelatedPair(path_h1, path_h2, n)

    def mixture_path(self, weights: list, hursts: list, grid: TimeGrid, seed_tag: tuple) -> CorrelatedFamily:
        """
        Weighted sum of finitely many completely correlated fBms.

        Args:
            weights (list): finite weights
            hursts (list): Hurst index of each component
            grid (TimeGrid): grid
            seed_tag (tuple): (master_seed, path_index)

        Returns:
            CorrelatedFamily: component paths and their weighted sum
        """
        if len(weights) != len(hursts) or not weights:
            raise DomainError("a mixture needs one weight per Hurst index")
        increments = self.brownian_increments(grid, seed_tag)
        paths = [self.volterra_path(FbmVolterra(h, grid.horizon), grid, increments, seed_tag) for h in hursts]
        return CorrelatedFamily(weights, paths)

    #-------------------------------------
    # Ensembles
    #-------------------------------------
    def increment_matrix(self, grid: TimeGrid, n_paths: int, master_seed: int) -> np.ndarray:
        """
        Driving increments of paths 0..n_paths-1, generated chunk by chunk on the pool.

        Returns:
            np.ndarray: shape (n_paths, n_points)
        """
        if n_paths < 1:
            raise DomainError(f"an ensemble needs at least one path, got {n_paths}")

        def chunk(start):
            stop = min(start + self.chunk_size, n_paths)
            return np.stack([self.brownian_increments(grid, (master_seed, k)) for k in range(start, stop)])

        return np.concatenate(self._map_chunks(chunk, n_paths))

    def kernel_ensemble(self, spec: KernelSpec, grid: TimeGrid, increments: np.ndarray, master_seed: int,
                        config_hash: str = "") -> Ensemble:
        """Apply the discretized kernel to every row of a shared increment matrix."""
        if self._constant_kernel(spec) is None:
            # built before the pool starts so workers only read the cache
            self.discretized_kernel(spec, grid)
        n_paths = increments.shape[0]

        def chunk(start):
            stop = min(start + self.chunk_size, n_paths)
            return self._apply_kernel(spec, grid, increments[start:stop])

        values = np.concatenate(self._map_chunks(chunk, n_paths))
        return Ensemble(grid, values, master_seed, increments=increments, config_hash=config_hash)

    def generate_ensemble(self, spec: KernelSpec, grid: TimeGrid, n_paths: int, master_seed: int,
                          method: str = "volterra", config_hash: str = "") -> Ensemble:
        """
        Ensemble of n_paths Volterra paths with seed tags (master_seed, 0..n_paths-1).

        Args:
            spec (KernelSpec): kernel
            grid (TimeGrid): grid
            n_paths (int): number of paths
            master_seed (int): run seed
            method (str): "volterra" (discretized integral) or "exact" (Cholesky)
            config_hash (str): provenance tag

        Returns:
            Ensemble: values of shape (n_paths, n_points)
        """
        if method == "volterra":
            increments = self.increment_matrix(grid, n_paths, master_seed)
            ensemble = self.kernel_ensemble(spec, grid, increments, master_seed, config_hash)
        elif method == "exact":
            factor = self._cholesky(spec, grid)

            def chunk(start):
                stop = min(start + self.chunk_size, n_paths)
                z = np.stack([
                    path_generator(master_seed, k, EXACT_STREAM).standard_normal(grid.n_points)
                    for k in range(start, stop)
                ])
                return z @ factor.T

            ensemble = Ensemble(grid, np.concatenate(self._map_chunks(chunk, n_paths)), master_seed,
                                config_hash=config_hash)
        else:
            raise DomainError(f"unknown sampling method '{method}'")
        self.logger.info(f"Generated {n_paths} {method} paths of {spec!r}")
        return ensemble

    def correlated_ensembles(self, h1: float, h2: float, grid: TimeGrid, n_paths: int, master_seed: int,
                             check_ranges: bool = True, config_hash: str = "") -> tuple:
        """
        B^{H1} and B^{H2} ensembles driven by the same increments.

        Returns:
            tuple: (ensemble_h1, ensemble_h2)
        """
        _check_mixture_parameters(h1, h2, 1, check_ranges)
        increments = self.increment_matrix(grid, n_paths, master_seed)
        ensemble_h1 = self.kernel_ensemble(FbmVolterra(h1, grid.horizon), grid, increments, master_seed, config_hash)
        ensemble_h2 = self.kernel_ensemble(FbmVolterra(h2, grid.horizon), grid, increments, master_seed, config_hash)
        return ensemble_h1, ensemble_h2

    def _map_chunks(self, work, n_paths: int) -> list:
        starts = range(0, n_paths, self.chunk_size)
        if self.threads == 1:
            return [work(start) for start in starts]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(work, starts))


def _check_mixture_parameters(h1: float, h2: float, n: int, check_ranges: bool):
    if int(n) != n or n < 1:
        raise DomainError(f"stabilization index N must be a positive integer, got {n}")
    if check_ranges:
        if not 0.0 < h1 <= 0.5:
            raise DomainError(f"stabilizing Hurst index must lie in (0, 1/2], got {h1}")
        if not 0.5 < h2 < 1.0:
            raise DomainError(f"main Hurst index must lie in (1/2, 1), got {h2}")


def holder_constant(path: SamplePath, gamma: float) -> float:
    """
    max over grid pairs s < t (origin included) of |X_t - X_s| / (t - s)^gamma.

    Args:
        path (SamplePath): path
        gamma (float): exponent in (0, 1)

    Returns:
        float: the discrete Hoelder constant
    """
    return float(holder_constants(path.with_origin()[None, :], path.grid.step, gamma)[0])


def holder_constants(values: np.ndarray, step: float, gamma: float) -> np.ndarray:
    """
    Row-wise discrete Hoelder constants of a (paths, points) array on a uniform grid.

    Args:
        values (np.ndarray): one path per row, origin column included
        step (float): grid spacing
        gamma (float): exponent in (0, 1)

    Returns:
        np.ndarray: one constant per row
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"Hoelder exponent must lie in (0,1), got {gamma}")
    values = np.atleast_2d(values)
    best = np.zeros(values.shape[0])
    for lag in range(1, values.shape[1]):
        diffs = np.abs(values[:, lag:] - values[:, :-lag]).max(axis=1)
        best = np.maximum(best, diffs / (lag * step) ** gamma)
    return best


def holder_modulus_statistic(pair: CorrelatedPair, gamma: float) -> float:
    """Larger of the two component Hoelder constants, the tightness modulus of the mixed family."""
    return max(holder_constant(pair.path_h1, gamma), holder_constant(pair.path_h2, gamma))
