import math
import numpy as np
from model.errors import DomainError


class TimeGrid:
    """
    Uniform grid t_i = i * step, i = 1..n, excluding the origin.

    Attributes:
        horizon (float): T, the last grid point
        n_points (int): number of grid points n
        step (float): spacing T / n
        points (np.ndarray): the grid t_1 < ... < t_n = T
    """
    def __init__(self, horizon: float, n_points: int):
        if not horizon > 0.0 or not math.isfinite(horizon):
            raise DomainError(f"grid horizon must be positive, got {horizon}")
        if int(n_points) != n_points or n_points < 1:
            raise DomainError(f"grid needs a positive integer number of points, got {n_points}")
        self.horizon = float(horizon)
        self.n_points = int(n_points)
        self.step = self.horizon / self.n_points
        points = self.step * np.arange(1, self.n_points + 1, dtype=float)
        points[-1] = self.horizon
        points.setflags(write=False)
        self.points = points

    @property
    def midpoints(self) -> np.ndarray:
        """Midpoints of the cells (t_{j-1}, t_j], j = 1..n."""
        return self.points - 0.5 * self.step

    def with_origin(self) -> np.ndarray:
        """The grid with t_0 = 0 prepended."""
        return np.concatenate(([0.0], self.points))

    def index_of(self, t: float) -> int:
        """
        Position of t in the grid.

        Args:
            t (float): a grid time

        Returns:
            int: i with points[i] == t (within a small fraction of the step)
        """
        position = t / self.step - 1.0
        index = int(round(position))
        if index < 0 or index >= self.n_points or abs(position - index) > 1e-9:
            raise DomainError(f"time {t} is not a point of the grid (step {self.step})")
        return index

    def key(self) -> tuple:
        return (self.horizon, self.n_points)

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def to_dict(self) -> dict:
        return {'horizon': self.horizon, 'n_points': self.n_points, 'step': self.step}


class SamplePath:
    """
    One realization on a grid.

    Attributes:
        grid (TimeGrid): time grid
        values (np.ndarray): value at each grid point
        driving_increments (np.ndarray | None): the Delta W_j per cell, None for Cholesky samples
        seed_tag (tuple): (master_seed, path_index)
        origin (float): value at t = 0 (x0 for solutions, 0 for noise)
    """
    def __init__(self, grid: TimeGrid, values, driving_increments=None, seed_tag: tuple = None, origin: float = 0.0):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_points,):
            raise DomainError(f"path has {values.shape} values for a grid of {grid.n_points} points")
        if driving_increments is not None:
            driving_increments = np.asarray(driving_increments, dtype=float)
            if driving_increments.shape != (grid.n_points,):
                raise DomainError("a path needs exactly one driving increment per grid cell")
        self.grid = grid
        self.values = values
        self.driving_increments = driving_increments
        self.seed_tag = seed_tag
        self.origin = float(origin)

    def with_origin(self) -> np.ndarray:
        """Values with the t = 0 value prepended."""
        return np.concatenate(([self.origin], self.values))

    def at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])

    def to_dict(self) -> dict:
        return {
            'seed_tag': self.seed_tag,
            'origin': self.origin,
            'grid': self.grid.to_dict(),
            'values': self.values.tolist()
        }


class CorrelatedPair:
    """
    Two completely correlated fBm paths and their stabilized mixture (1/N) B^{H1} + B^{H2}.

    Attributes:
        path_h1 (SamplePath): stabilizing component
        path_h2 (SamplePath): main component
        mixture (SamplePath): (1/N) path_h1 + path_h2, built pointwise
        n (int): stabilization index N
    """
    def __init__(self, path_h1: SamplePath, path_h2: SamplePath, n: int):
        self.path_h1 = path_h1
        self.path_h2 = path_h2
        self.n = int(n)
        self.mixture = SamplePath(
            path_h2.grid,
            (1.0 / self.n) * path_h1.values + path_h2.values,
            driving_increments=path_h2.driving_increments,
            seed_tag=path_h2.seed_tag
        )


class CorrelatedFamily:
    """
    Finitely many completely correlated Volterra paths and their weighted sum.

    Attributes:
        weights (list): weight of each component
        paths (list): SamplePath per component, all from the same increments
        mixture (SamplePath): sum of weight * component path
    """
    def __init__(self, weights: list, paths: list):
        if not paths or len(weights) != len(paths):
            raise DomainError("a correlated family needs one weight per component path")
        self.weights = [float(w) for w in weights]
        self.paths = paths
        total = np.zeros_like(paths[0].values)
        for weight, path in zip(self.weights, paths):
            total = total + weight * path.values
        self.mixture = SamplePath(
            paths[0].grid,
            total,
            driving_increments=paths[0].driving_increments,
            seed_tag=paths[0].seed_tag
        )


class Ensemble:
    """
    Reproducible collection of paths identified by (master_seed, config_hash).

    Attributes:
        grid (TimeGrid): common grid
        values (np.ndarray): shape (n_paths, n_points)
        master_seed (int): run seed
        path_indices (np.ndarray): index of every row, the second half of each seed tag
        origin (float | np.ndarray): t = 0 value (scalar or one per path)
        increments (np.ndarray | None): driving increments, shape (n_paths, n_points)
        config_hash (str): hash of the configuration that produced the ensemble
    """
    def __init__(
        self,
        grid: TimeGrid,
        values,
        master_seed: int,
        path_indices=None,
        origin=0.0,
        increments=None,
        config_hash: str = ""
    ):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != grid.n_points:
            raise DomainError(f"ensemble values of shape {values.shape} do not fit a {grid.n_points}-point grid")
        self.grid = grid
        self.values = values
        self.master_seed = int(master_seed)
        if path_indices is None:
            path_indices = np.arange(values.shape[0])
        self.path_indices = np.asarray(path_indices, dtype=np.int64)
        self.origin = origin
        self.increments = increments
        self.config_hash = config_hash

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def origins(self) -> np.ndarray:
        """t = 0 value of every path."""
        return np.broadcast_to(np.asarray(self.origin, dtype=float), (self.n_paths,))

    def with_origin(self) -> np.ndarray:
        """Values with the t = 0 column prepended."""
        return np.column_stack((self.origins(), self.values))

    def at(self, t: float) -> np.ndarray:
        """Values of all paths at grid time t."""
        return self.values[:, self.grid.index_of(t)]

    def path(self, row: int) -> SamplePath:
        increments = None if self.increments is None else self.increments[row]
        return SamplePath(
            self.grid,
            self.values[row],
            driving_increments=increments,
            seed_tag=(self.master_seed, int(self.path_indices[row])),
            origin=float(self.origins()[row])
        )

    def head(self, n_paths: int) -> "Ensemble":
        """The first n_paths rows with their seeds and increments."""
        n_paths = min(int(n_paths), self.n_paths)
        origin = self.origin if np.ndim(self.origin) == 0 else np.asarray(self.origin)[:n_paths]
        return Ensemble(
            self.grid,
            self.values[:n_paths],
            self.master_seed,
            path_indices=self.path_indices[:n_paths],
            origin=origin,
            increments=None if self.increments is None else self.increments[:n_paths],
            config_hash=self.config_hash
        )

    def derive(self, values, origin=None) -> "Ensemble":
        """Ensemble with new values but the same seeds, grid and increments."""
        return Ensemble(
            self.grid,
            values,
            self.master_seed,
            path_indices=self.path_indices,
            origin=self.origin if origin is None else origin,
            increments=self.increments,
            config_hash=self.config_hash
        )

    def to_dict(self) -> dict:
        return {
            'master_seed': self.master_seed,
            'config_hash': self.config_hash,
            'n_paths': self.n_paths,
            'grid': self.grid.to_dict()
        }
