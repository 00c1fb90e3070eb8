from model.drift import DriftSpec
from model.errors import DomainError
from model.kernel import KernelSpec
from model.path import SamplePath, TimeGrid


class SolverConfig:
    """
    Everything needed to solve dX = b(t, X) dt + dB^K_t, X_0 = x0 on a grid.

    Attributes:
        grid (TimeGrid): time grid
        x0 (float): initial condition
        drift (DriftSpec): drift b
        noise (KernelSpec | None): kernel of the driving Volterra process, None when the noise is supplied directly
        growth_constant (float | None): declared C of the linear growth bound, if any
    """
    def __init__(self, grid: TimeGrid, x0: float, drift: DriftSpec, noise: KernelSpec = None,
                 growth_constant: float = None):
        if not isinstance(drift, DriftSpec):
            raise DomainError(f"{drift!r} is not a drift specification")
        self.grid = grid
        self.x0 = float(x0)
        self.drift = drift
        self.noise = noise
        self.growth_constant = growth_constant

    def with_drift(self, drift: DriftSpec) -> "SolverConfig":
        return SolverConfig(self.grid, self.x0, drift, self.noise, self.growth_constant)

    def to_dict(self) -> dict:
        return {
            'grid': self.grid.to_dict(),
            'x0': self.x0,
            'drift': self.drift.to_dict(),
            'noise': self.noise.to_dict() if self.noise is not None else None,
            'growth_constant': self.growth_constant
        }


class CgpDecomposition:
    """
    Conditionally Gaussian decomposition Y_t(eps) = X_{t-eps} + (B_t - B_{t-eps}).

    Attributes:
        t (float): evaluation time
        epsilon (float): look-back window
        y (float): the CGP value
        xi (float): conditional mean given the past up to t - eps
        kappa_sq (float): conditional variance kappa_eps^2
    """
    def __init__(self, t: float, epsilon: float, y: float, xi: float, kappa_sq: float):
        self.t = t
        self.epsilon = epsilon
        self.y = y
        self.xi = xi
        self.kappa_sq = kappa_sq

    @property
    def standardized_residual(self) -> float:
        return (self.y - self.xi) / self.kappa_sq ** 0.5

    def to_dict(self) -> dict:
        return {'t': self.t, 'epsilon': self.epsilon, 'y': self.y, 'xi': self.xi, 'kappa_sq': self.kappa_sq}


class ApproximationResult:
    """
    Outcome of the mollified-drift ladder on one noise path.

    Attributes:
        path (SamplePath): solution at the finest level
        levels (list): mollification indices n_1 < ... < n_k
        trace (list): sup_t |X^{n_j} - X^{n_{j+1}}| for consecutive levels
        solutions (list): SamplePath per level
    """
    def __init__(self, path: SamplePath, levels: list, trace: list, solutions: list):
        self.path = path
        self.levels = list(levels)
        self.trace = list(trace)
        self.solutions = solutions

    def to_rows(self) -> list:
        return [
            {'level': level, 'next_level': nxt, 'sup_distance': distance}
            for level, nxt, distance in zip(self.levels, self.levels[1:], self.trace)
        ]
