import math
from model.errors import DomainError


class KernelSpec:
    """
    Base class of the Volterra kernels K(t, s) driving B^K_t = int_0^t K(t,s) dW_s.

    Attributes:
        horizon (float): time horizon T > 0
    """
    kind = "kernel"

    def __init__(self, horizon: float = 1.0):
        if not horizon > 0.0 or not math.isfinite(horizon):
            raise DomainError(f"horizon must be a positive finite time, got {horizon}")
        self.horizon = float(horizon)

    def components(self) -> list:
        """
        Flatten the kernel into (weight, leaf kernel) pairs.

        Returns:
            list: [(weight, KernelSpec)] with leaf kernels only
        """
        return [(1.0, self)]

    def key(self) -> tuple:
        """Hashable identity used for caching discretizations."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, KernelSpec) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"{type(self).__name__}{self.key()[1:]}"


class _HurstKernel(KernelSpec):
    """
    Leaf kernel parameterized by a Hurst index.

    Attributes:
        hurst (float): H in (0, 1)
    """
    def __init__(self, hurst: float, horizon: float = 1.0):
        super().__init__(horizon)
        if not 0.0 < hurst < 1.0:
            raise DomainError("Hurst parameter must lie in (0,1)")
        self.hurst = float(hurst)

    @property
    def diagonal_exponent(self) -> float:
        """Power of (t - s) in K(t, s) as s approaches t."""
        return self.hurst - 0.5

    @property
    def origin_exponent(self) -> float:
        """Power of s in K(t, s) as s approaches 0."""
        return 0.0

    def key(self) -> tuple:
        return (self.kind, self.hurst, self.horizon)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'hurst': self.hurst, 'horizon': self.horizon}


class FbmVolterra(_HurstKernel):
    """Volterra kernel of fractional Brownian motion with Hurst index H."""
    kind = "fbm"

    @property
    def origin_exponent(self) -> float:
        return -abs(self.hurst - 0.5)


class RiemannLiouville(_HurstKernel):
    """Riemann-Liouville kernel (t - s)^{H - 1/2}."""
    kind = "rl"


class Mixture(KernelSpec):
    """
    Weighted sum of kernels driven by one shared Brownian motion.

    Attributes:
        weighted (list): [(weight, KernelSpec)] as given
    """
    kind = "mixture"

    def __init__(self, weighted: list, horizon: float = None):
        if not weighted:
            raise DomainError("a mixture kernel needs at least one component")
        horizons = {inner.horizon for _, inner in weighted}
        super().__init__(horizon if horizon is not None else max(horizons))
        for weight, inner in weighted:
            if not math.isfinite(weight):
                raise DomainError(f"mixture weights must be finite, got {weight}")
            if not isinstance(inner, KernelSpec):
                raise DomainError(f"mixture component {inner!r} is not a kernel")
        self.weighted = [(float(w), inner) for w, inner in weighted]

    def components(self) -> list:
        flat = []
        for weight, inner in self.weighted:
            for inner_weight, leaf in inner.components():
                flat.append((weight * inner_weight, leaf))
        return flat

    def key(self) -> tuple:
        return (self.kind, tuple((w, inner.key()) for w, inner in self.weighted), self.horizon)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'horizon': self.horizon,
            'components': [{'weight': w, 'kernel': inner.to_dict()} for w, inner in self.weighted]
        }


def stabilized_mixture(h1: float, h2: float, n: int, horizon: float = 1.0) -> Mixture:
    """
    Kernel (1/N) K_{H1} + K_{H2} of the stabilized mixed equation.

    Args:
        h1 (float): Hurst index of the stabilizing fBm
        h2 (float): Hurst index of the main fBm
        n (int): stabilization index N >= 1
        horizon (float): time horizon

    Returns:
        Mixture: the combined kernel
    """
    return Mixture([(1.0 / n, FbmVolterra(h1, horizon)), (1.0, FbmVolterra(h2, horizon))], horizon)


class LocalVariance:
    """
    kappa_eps^2 = int_{t-eps}^t K(t,s)^2 ds.

    Attributes:
        t (float): evaluation time
        epsilon (float): window length
        value (float): kappa_eps^2 >= 0
        error (float): quadrature error estimate
    """
    def __init__(self, t: float, epsilon: float, value: float, error: float = 0.0):
        self.t = t
        self.epsilon = epsilon
        self.value = max(value, 0.0)
        self.error = error

    @property
    def kappa(self) -> float:
        return math.sqrt(self.value)

    def to_dict(self) -> dict:
        return {'t': self.t, 'epsilon': self.epsilon, 'value': self.value, 'error': self.error}


class BoundReport:
    """
    Empirical certificate for kappa_eps >= c eps^H.

    Attributes:
        hurst (float): exponent H under test
        inf_ratio (float): infimum over the grid of kappa_eps / eps^H
        slopes (dict): t -> fitted slope of log kappa_eps against log eps
        rows (list): per (t, eps) dicts with kappa and ratio
        slope_tolerance (float): allowed excess of the slope over H
    """
    def __init__(self, hurst: float, inf_ratio: float, slopes: dict, rows: list, slope_tolerance: float = 0.02):
        self.hurst = hurst
        self.inf_ratio = inf_ratio
        self.slopes = slopes
        self.rows = rows
        self.slope_tolerance = slope_tolerance

    @property
    def slope(self) -> float:
        """Mean of the per-t slopes."""
        return sum(self.slopes.values()) / len(self.slopes)

    @property
    def certified(self) -> bool:
        return self.inf_ratio > 0.0 and all(s <= self.hurst + self.slope_tolerance for s in self.slopes.values())

    def to_dict(self) -> dict:
        return {
            'hurst': self.hurst,
            'inf_ratio': self.inf_ratio,
            'slope': self.slope,
            'slopes': self.slopes,
            'certified': self.certified,
            'rows': self.rows
        }
