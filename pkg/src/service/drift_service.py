"""
Drift evaluation, structural assumption checks, mollification and the Lamperti transform.
"""
import logging
import math
from functools import lru_cache
import numpy as np
from model.drift import DriftSpec, SmoothDrift, TransformedDrift
from model.errors import DomainError, UnboundedDrift
from utils.numerics.quadrature import legendre_rule
import config.app_settings as APP_SETTINGS

logger = logging.getLogger(__name__)


def eval_drift(spec: DriftSpec, t, x):
    """
    Evaluate b(t, x).

    Args:
        spec (DriftSpec): drift
        t (float | array_like): time(s) in [0, T]
        x (float | array_like): state(s)

    Returns:
        float | np.ndarray: drift value(s), a float for scalar x
    """
    value = spec.evaluate(t, np.asarray(x, dtype=float))
    return float(value) if np.ndim(value) == 0 else value


def _sample_mesh(t_samples, x_samples) -> tuple:
    t_values = np.asarray(t_samples, dtype=float).ravel()
    x_values = np.asarray(x_samples, dtype=float).ravel()
    if t_values.size == 0 or x_values.size == 0:
        raise DomainError("assumption checks need nonempty t and x samples")
    return np.meshgrid(t_values, x_values, indexing='ij')


def check_linear_growth(spec: DriftSpec, growth_constant: float, t_samples, x_samples) -> bool:
    """
    True iff |b(t, x)| <= C (1 + |x|) at every sampled (t, x).

    Args:
        spec (DriftSpec): drift
        growth_constant (float): C
        t_samples (array_like): sampled times
        x_samples (array_like): sampled states

    Returns:
        bool: outcome of the sweep
    """
    t_mesh, x_mesh = _sample_mesh(t_samples, x_samples)
    values = spec.evaluate(t_mesh, x_mesh)
    holds = bool(np.all(np.abs(values) <= growth_constant * (1.0 + np.abs(x_mesh))))
    if not holds:
        logger.warning(f"Linear growth with C={growth_constant} fails for {spec.kind} drift")
    return holds


def check_bounded(spec: DriftSpec, t_samples, x_samples) -> bool:
    """
    Condition (B1): the drift declares a finite sup bound and respects it on the samples.

    Returns:
        bool: outcome of the sweep
    """
    bound = spec.sup_bound()
    if not math.isfinite(bound):
        return False
    t_mesh, x_mesh = _sample_mesh(t_samples, x_samples)
    return bool(np.all(np.abs(spec.evaluate(t_mesh, x_mesh)) <= bound + 1e-12))


def check_piecewise_lipschitz(spec: DriftSpec, lipschitz: float, t_samples, x_samples) -> bool:
    """
    Condition (B2): Lipschitz in x with constant L between consecutive breakpoints.

    Difference quotients are taken between neighbouring x samples that fall in the
    same piece; pairs straddling a breakpoint are skipped.

    Returns:
        bool: outcome of the sweep
    """
    x_sorted = np.unique(np.asarray(x_samples, dtype=float))
    t_mesh, x_mesh = _sample_mesh(t_samples, x_sorted)
    values = spec.evaluate(t_mesh, x_mesh)
    pieces = np.searchsorted(np.asarray(spec.breakpoints(), dtype=float), x_sorted, side='right')
    # a pair shares a piece only if neither end sits on a breakpoint it could jump at
    on_break = np.isin(x_sorted, spec.breakpoints())
    same_piece = (pieces[1:] == pieces[:-1]) & ~on_break[1:] & ~on_break[:-1]
    quotients = np.abs(np.diff(values, axis=1)) / np.diff(x_sorted)
    return bool(np.all(quotients[:, same_piece] <= lipschitz * (1.0 + 1e-9) + 1e-12))


#-------------------------------------
# Mollification
#-------------------------------------
@lru_cache(maxsize=64)
def mollifier_rule(n: int, shape: str, quad_points: int):
    """
    Offsets, probability weights and total variation of the bump phi_n.

    phi(u) = exp(-1 / (1 - u^2)) on (-1, 1), rescaled to support width 2/n and unit mass.
    The symmetric shape is centred at 0, the one-sided shape lives on (0, 2/n).

    Returns:
        tuple: (offsets, weights, total_variation)
    """
    if shape not in APP_SETTINGS.MOLLIFIER_SHAPES:
        raise DomainError(f"unknown mollifier shape '{shape}', expected one of {APP_SETTINGS.MOLLIFIER_SHAPES}")
    nodes, weights = legendre_rule(quad_points)
    bump = np.exp(-1.0 / (1.0 - nodes ** 2))
    mass = weights * bump
    normalizer = mass.sum()
    probabilities = mass / normalizer
    offsets = nodes / n if shape == "symmetric" else (nodes + 1.0) / n
    # unimodal density with peak n e^{-1} / normalizer
    total_variation = 2.0 * n * math.exp(-1.0) / normalizer
    offsets.setflags(write=False)
    probabilities.setflags(write=False)
    return offsets, probabilities, total_variation


class MollifiedFunction:
    """
    Callable b_n(t, x) = sum_k w_k b(t, x - y_k), the quadrature form of (b * phi_n)(t, x).

    Attributes:
        base (DriftSpec): drift being smoothed
        n (int): mollification index
        shape (str): bump shape
    """
    def __init__(self, base: DriftSpec, n: int, shape: str, quad_points: int):
        self.base = base
        self.n = n
        self.shape = shape
        self.offsets, self.weights, self.total_variation = mollifier_rule(n, shape, quad_points)

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        shifted = x[..., None] - self.offsets
        if np.ndim(t):
            t = np.broadcast_to(np.asarray(t, dtype=float)[..., None], shifted.shape)
        return self.base.evaluate(t, shifted) @ self.weights

    def to_dict(self) -> dict:
        return {'kind': 'mollified', 'n': self.n, 'shape': self.shape, 'base': self.base.to_dict()}


def mollify(spec: DriftSpec, n: int, quad_points: int = None, shape: str = "symmetric") -> DriftSpec:
    """
    Smooth approximation b_n of a bounded drift by convolution with a bump of width 2/n.

    Args:
        spec (DriftSpec): bounded drift (smooth drifts are returned unchanged)
        n (int): mollification index >= 1
        quad_points (int): quadrature nodes on the bump support
        shape (str): "symmetric" or "one_sided"

    Returns:
        DriftSpec: a SmoothDrift with sup |b_n| <= sup |b|
    """
    if isinstance(spec, SmoothDrift):
        return spec
    if int(n) != n or n < 1:
        raise DomainError(f"mollification index must be a positive integer, got {n}")
    bound = spec.sup_bound()
    if not math.isfinite(bound):
        logger.error(f"Cannot mollify unbounded {spec.kind} drift")
        raise UnboundedDrift(f"{spec.kind} drift has no finite sup bound")

    function = MollifiedFunction(spec, int(n), shape, int(quad_points or APP_SETTINGS.MOLLIFIER_NODES))
    return SmoothDrift(function, bound * function.total_variation, bound, f"mollified[{shape},n={n}]")


#-------------------------------------
# Smooth drift registry (names usable from experiment configs)
#-------------------------------------
def _clamped_reversion(params: dict) -> SmoothDrift:
    level = params.get('level', 1.0)
    return SmoothDrift(lambda t, x: np.clip(-x, -level, level), 1.0, level, "clamped_reversion")


def _tanh(params: dict) -> SmoothDrift:
    scale = params.get('scale', 1.0)
    return SmoothDrift(lambda t, x: -scale * np.tanh(x), abs(scale), abs(scale), "tanh")


def _sine(params: dict) -> SmoothDrift:
    amplitude = params.get('amplitude', 1.0)
    return SmoothDrift(lambda t, x: amplitude * np.sin(x), abs(amplitude), abs(amplitude), "sine")


def _constant(params: dict) -> SmoothDrift:
    value = params.get('value', 0.0)
    return SmoothDrift(lambda t, x: np.full(np.shape(x), value, dtype=float), 0.0, abs(value), "constant")


def _linear(params: dict) -> SmoothDrift:
    slope = params.get('slope', 1.0)
    intercept = params.get('intercept', 0.0)
    bound = abs(intercept) if slope == 0.0 else math.inf
    return SmoothDrift(lambda t, x: intercept + slope * np.asarray(x, dtype=float), abs(slope), bound, "linear")


SMOOTH_FUNCTIONS = {
    'zero': lambda params: _constant({'value': 0.0}),
    'constant': _constant,
    'linear': _linear,
    'clamped_reversion': _clamped_reversion,
    'tanh': _tanh,
    'sine': _sine,
}


def smooth_drift(name: str, **params) -> SmoothDrift:
    """
    Build a named smooth drift.

    Args:
        name (str): key of SMOOTH_FUNCTIONS
        **params: function parameters (value, slope, intercept, level, scale, amplitude)

    Returns:
        SmoothDrift: the drift with its Lipschitz constant and sup bound
    """
    factory = SMOOTH_FUNCTIONS.get(name)
    if factory is None:
        raise DomainError(f"unknown smooth drift '{name}', expected one of {sorted(SMOOTH_FUNCTIONS)}")
    return factory(params)


#-------------------------------------
# Lamperti transform
#-------------------------------------
class LampertiTransform:
    """
    F(x) = int_0^x dz / sigma(z) on a cached grid, with its inverse.

    F is accumulated cell by cell with Gauss-Legendre rules and evaluated between
    cache points by integrating from the nearest node below, so it is exact to
    quadrature precision and strictly increasing. The inverse bisects inside the
    cache cell holding y.

    Attributes:
        sigma (callable): vectorized diffusion coefficient
        sigma_low (float): lower bound c_low > 0
        sigma_high (float): upper bound c_high
        nodes (np.ndarray): cache grid over the working range
        values (np.ndarray): F at the cache grid
    """
    _CELL_POINTS = 8

    def __init__(self, sigma, sigma_bounds: tuple, working_range: tuple = (-50.0, 50.0), cache_points: int = None):
        self.logger = logging.getLogger(__name__)
        c_low, c_high = (float(b) for b in sigma_bounds)
        if not 0.0 < c_low <= c_high:
            raise DomainError(f"sigma bounds need 0 < c_low <= c_high, got ({c_low}, {c_high})")
        lo, hi = (float(v) for v in working_range)
        if not lo < 0.0 < hi:
            raise DomainError(f"working range must contain 0, got [{lo}, {hi}]")

        self.sigma = sigma
        self.sigma_low = c_low
        self.sigma_high = c_high
        self.nodes = np.linspace(lo, hi, int(cache_points or APP_SETTINGS.LAMPERTI_CACHE_POINTS))

        sampled = np.asarray(sigma(self.nodes), dtype=float) * np.ones_like(self.nodes)
        if np.any(sampled < c_low) or np.any(sampled > c_high) or not np.all(np.isfinite(sampled)):
            self.logger.error("sigma leaves its declared bounds on the cache grid")
            raise DomainError(f"sigma must stay within [{c_low}, {c_high}] on the working range")

        cells = self._partial(self.nodes[:-1], self.nodes[1:])
        values = np.concatenate(([0.0], np.cumsum(cells)))
        origin = int(np.searchsorted(self.nodes, 0.0, side='right') - 1)
        values -= values[origin] + self._partial(np.array([self.nodes[origin]]), np.array([0.0]))[0]
        self.values = values

    def _partial(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """int_a^b dz / sigma(z), elementwise."""
        nodes, weights = legendre_rule(self._CELL_POINTS)
        half = 0.5 * (b - a)
        z = a[..., None] + half[..., None] * (1.0 + nodes)
        reciprocal = 1.0 / (np.asarray(self.sigma(z), dtype=float) * np.ones_like(z))
        return half * (reciprocal @ weights)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.nodes[0]) or np.any(x > self.nodes[-1]):
            raise DomainError(f"x outside the Lamperti working range [{self.nodes[0]}, {self.nodes[-1]}]")
        index = np.clip(np.searchsorted(self.nodes, x, side='right') - 1, 0, self.nodes.size - 2)
        return self.values[index] + self._partial(self.nodes[index], x)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < self.values[0]) or np.any(y > self.values[-1]):
            raise DomainError("y outside the image of the Lamperti working range")
        index = np.clip(np.searchsorted(self.values, y, side='right') - 1, 0, self.nodes.size - 2)
        lo = self.nodes[index].astype(float)
        hi = self.nodes[index + 1].astype(float)
        while np.any(hi - lo > APP_SETTINGS.LAMPERTI_INVERSE_TOL):
            mid = 0.5 * (lo + hi)
            below = self.forward(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def lamperti_transform(sigma, sigma_bounds: tuple, drift: DriftSpec, working_range: tuple = (-50.0, 50.0)) -> tuple:
    """
    Reduce dX = b dt + sigma(X) dB to additive noise through Y = F(X).

    Args:
        sigma (callable): vectorized sigma(x)
        sigma_bounds (tuple): (c_low > 0, c_high)
        drift (DriftSpec): drift b of the multiplicative equation
        working_range (tuple): x-interval covered by the cache

    Returns:
        tuple: (F, F_inverse, transformed_drift)
    """
    transform = LampertiTransform(sigma, sigma_bounds, working_range)
    transformed = TransformedDrift(drift, transform.inverse, sigma, transform.sigma_low, transform.forward)
    logger.info(f"Lamperti transform cached on {transform.nodes.size} points over {working_range}")
    return transform.forward, transform.inverse, transformed
