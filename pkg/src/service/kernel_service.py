"""
Volterra kernel evaluation, local variances, covariances and the kernel lower bound check.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
import numpy as np
from scipy import linalg, stats
from model.errors import DomainError, NotPositiveDefinite
from model.kernel import BoundReport, FbmVolterra, KernelSpec, LocalVariance, RiemannLiouville
from model.path import TimeGrid
from utils.numerics.quadrature import certified_jacobi_integral
from utils.numerics.special_functions import gauss_2f1_array, ln_gamma
import config.app_settings as APP_SETTINGS

logger = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def fbm_normalization(hurst: float) -> float:
    """
    Constant multiplying (t-s)^{H-1/2} F(H-1/2, 1/2-H, H+1/2, 1-t/s) in the fBm kernel.

    The bare hypergeometric kernel has covariance V_H R_H with
    V_H = Gamma(2-2H) cos(pi H) / (pi H (1-2H)); dividing by sqrt(V_H) gives Var(B_t) = t^{2H}.

    Args:
        hurst (float): H in (0, 1)

    Returns:
        float: 1 / (Gamma(H + 1/2) sqrt(V_H))
    """
    if hurst == 0.5:
        return 1.0
    v_h = math.exp(ln_gamma(2.0 - 2.0 * hurst)) * math.cos(math.pi * hurst) / (math.pi * hurst * (1.0 - 2.0 * hurst))
    return math.exp(-ln_gamma(hurst + 0.5)) / math.sqrt(v_h)


def leaf_values(leaf: KernelSpec, t, s) -> np.ndarray:
    """
    Vectorized K(t, s) of a single (non-mixture) kernel, 0 < s < t assumed.

    Args:
        leaf (KernelSpec): FbmVolterra or RiemannLiouville
        t (array_like): first arguments
        s (array_like): second arguments, broadcast against t

    Returns:
        np.ndarray: kernel values
    """
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    h = leaf.hurst
    power = (t - s) ** (h - 0.5)
    if isinstance(leaf, RiemannLiouville):
        return power
    if isinstance(leaf, FbmVolterra):
        if h == 0.5:
            return np.ones_like(power)
        return fbm_normalization(h) * power * gauss_2f1_array(h - 0.5, 0.5 - h, h + 0.5, 1.0 - t / s)
    raise DomainError(f"unsupported kernel {leaf!r}")


def kernel_values(spec: KernelSpec, t, s) -> np.ndarray:
    """
    Vectorized K(t, s); mixtures return the weighted sum of their components.

    Args:
        spec (KernelSpec): kernel
        t (array_like): first arguments
        s (array_like): second arguments

    Returns:
        np.ndarray: kernel values
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0) or np.any(s >= t) or np.any(t > spec.horizon * (1.0 + 1e-12)):
        raise DomainError(f"kernel needs 0 < s < t <= T={spec.horizon}")
    total = None
    for weight, leaf in spec.components():
        values = weight * leaf_values(leaf, t, s)
        total = values if total is None else total + values
    return total


def kernel_eval(spec: KernelSpec, t: float, s: float) -> float:
    """
    Evaluate K(t, s).

    Args:
        spec (KernelSpec): kernel
        t (float): time, 0 < t <= T
        s (float): time, 0 < s < t

    Returns:
        float: K(t, s)
    """
    return float(kernel_values(spec, t, s))


def cross_integral(spec_a: KernelSpec, t_a: float, spec_b: KernelSpec, t_b: float, lo: float, hi: float,
                   quad_points: int = None):
    """
    int_lo^hi K_a(t_a, u) K_b(t_b, u) du with the endpoint powers handled by Gauss-Jacobi rules.

    hi must not exceed min(t_a, t_b); when hi equals t_a (or t_b) the diagonal power of that
    kernel is absorbed into the weight, and when lo is 0 the origin powers are.

    Returns:
        tuple: (value, error_estimate)
    """
    if hi <= lo:
        return 0.0, 0.0
    at_a = math.isclose(hi, t_a, rel_tol=0.0, abs_tol=1e-14 * max(1.0, t_a))
    at_b = math.isclose(hi, t_b, rel_tol=0.0, abs_tol=1e-14 * max(1.0, t_b))
    value = 0.0
    error = 0.0
    for weight_a, leaf_a in spec_a.components():
        for weight_b, leaf_b in spec_b.components():
            upper = (leaf_a.diagonal_exponent if at_a else 0.0) + (leaf_b.diagonal_exponent if at_b else 0.0)
            lower = (leaf_a.origin_exponent + leaf_b.origin_exponent) if lo == 0.0 else 0.0
            pair = (leaf_a, t_a, leaf_b, t_b)
            if lower == 0.0:
                part, part_error = _pair_integral(pair, lo, hi, upper, 0.0, quad_points)
            else:
                part, part_error = _origin_graded_integral(pair, hi, upper, lower, quad_points)
            value += weight_a * weight_b * part
            error += abs(weight_a * weight_b) * part_error
    return value, error


def _pair_integral(pair: tuple, lo: float, hi: float, upper: float, lower: float, quad_points: int):
    """int_lo^hi K_a(t_a, u) K_b(t_b, u) du with (hi-u)^upper (u-lo)^lower in the Jacobi weight."""
    leaf_a, t_a, leaf_b, t_b = pair

    def smooth_factor(u):
        product = leaf_values(leaf_a, t_a, u) * leaf_values(leaf_b, t_b, u)
        return product / ((hi - u) ** upper * (u - lo) ** lower)

    return certified_jacobi_integral(smooth_factor, lo, hi, upper, lower, quad_points)


def _origin_graded_integral(pair: tuple, hi: float, upper: float, lower: float, quad_points: int):
    """
    int_0^hi of the kernel product on the geometric pieces [hi 2^-(k+1), hi 2^-k].

    Near 0 the fBm kernel is A s^{1/2-H} + C s^{H-1/2} + ..., so one Jacobi weight cannot
    absorb every power; on the dyadic pieces the product is analytic, and the innermost
    piece [0, hi 2^-m] keeps the leading power in its weight.
    """
    levels = APP_SETTINGS.QUADRATURE_ORIGIN_LEVELS
    edges = hi * 2.0 ** -np.arange(levels + 1)
    value, error = _pair_integral(pair, edges[1], edges[0], upper, 0.0, quad_points)
    for k in range(1, levels):
        part, part_error = _pair_integral(pair, edges[k + 1], edges[k], 0.0, 0.0, quad_points)
        value += part
        error += part_error
    part, part_error = _pair_integral(pair, 0.0, edges[-1], 0.0, lower, quad_points)
    return value + part, error + part_error


def local_variance(spec: KernelSpec, t: float, epsilon: float, quad_points: int = None) -> LocalVariance:
    """
    kappa_eps^2 = int_{t-eps}^t K(t, s)^2 ds.

    Args:
        spec (KernelSpec): kernel
        t (float): window end, 0 < t <= T
        epsilon (float): window length, 0 < eps <= t (eps = t is the full window)
        quad_points (int): starting number of quadrature nodes, >= 2

    Returns:
        LocalVariance: value with its quadrature error estimate
    """
    if quad_points is not None and quad_points < 2:
        raise DomainError("local variance needs at least 2 quadrature points")
    if not (0.0 < epsilon <= t * (1.0 + 1e-15)) or t > spec.horizon * (1.0 + 1e-12):
        raise DomainError(f"invalid window: need 0 < eps={epsilon} <= t={t} <= T={spec.horizon}")
    lo = max(t - epsilon, 0.0)
    if lo < 1e-15 * t:
        lo = 0.0
    value, error = cross_integral(spec, t, spec, t, lo, t, quad_points)
    return LocalVariance(t, epsilon, value, error)


def process_variance(spec: KernelSpec, t: float) -> float:
    """Var(B^K_t) = int_0^t K(t, s)^2 ds."""
    return local_variance(spec, t, t).value


def verify_kernel_lower_bound(spec: KernelSpec, hurst: float, eps_grid: list, t_grid: list,
                              quad_points: int = None, slope_tolerance: float = 0.02) -> BoundReport:
    """
    Tabulate kappa_eps / eps^H over a grid and fit log kappa_eps against log eps per t.

    Args:
        spec (KernelSpec): kernel under test
        hurst (float): exponent H of the bound kappa_eps >= c eps^H
        eps_grid (list): window lengths
        t_grid (list): window ends
        quad_points (int): starting quadrature size
        slope_tolerance (float): allowed excess of the fitted slope over H

    Returns:
        BoundReport: infimum ratio, per-t slopes and the ratio table
    """
    if not eps_grid or not t_grid:
        raise DomainError("the bound check needs nonempty eps and t grids")
    rows = []
    slopes = {}
    for t in t_grid:
        log_eps = []
        log_kappa = []
        for epsilon in eps_grid:
            kappa = local_variance(spec, t, epsilon, quad_points).kappa
            ratio = kappa / epsilon ** hurst
            rows.append({'t': t, 'epsilon': epsilon, 'kappa': kappa, 'ratio': ratio})
            log_eps.append(math.log(epsilon))
            log_kappa.append(math.log(kappa))
        if len(log_eps) >= 2:
            slopes[t] = float(stats.linregress(log_eps, log_kappa).slope)

    if not slopes:
        raise DomainError("the bound check needs at least two window lengths to fit a slope")
    inf_ratio = min(row['ratio'] for row in rows)
    report = BoundReport(hurst, inf_ratio, slopes, rows, slope_tolerance)
    logger.info(f"Kernel bound for {spec!r}: inf ratio {inf_ratio:.6g}, mean slope {report.slope:.4f}")
    return report


def kernel_upper_bound_ratio(spec: FbmVolterra, t_grid: list, s_fractions: list) -> float:
    """
    sup of |K_H(t,s)| / (s^{-|H-1/2|} (t-s)^{max(H-1/2, 0)}) over t in t_grid, s = fraction * t.

    Returns:
        float: the empirical constant of the kernel upper bound
    """
    h = spec.hurst
    best = 0.0
    for t in t_grid:
        s = np.asarray(s_fractions, dtype=float) * t
        envelope = s ** (-abs(h - 0.5)) * (t - s) ** max(h - 0.5, 0.0)
        best = max(best, float(np.max(np.abs(kernel_values(spec, t, s)) / envelope)))
    return best


def fbm_covariance(hurst: float, s, t):
    """
    Closed-form fBm covariance 1/2 (|t|^{2H} + |s|^{2H} - |t-s|^{2H}).

    Args:
        hurst (float): H in (0, 1)
        s (float | array_like): first time(s)
        t (float | array_like): second time(s)

    Returns:
        float | np.ndarray: covariance value(s)
    """
    if not 0.0 < hurst < 1.0:
        raise DomainError("Hurst parameter must lie in (0,1)")
    s_arr = np.abs(np.asarray(s, dtype=float))
    t_arr = np.abs(np.asarray(t, dtype=float))
    two_h = 2.0 * hurst
    value = 0.5 * (t_arr ** two_h + s_arr ** two_h - np.abs(t_arr - s_arr) ** two_h)
    return float(value) if np.ndim(value) == 0 else value


def covariance_matrix(spec: KernelSpec, grid: TimeGrid, quad_points: int = None, threads: int = 1) -> np.ndarray:
    """
    C[i][j] = Cov(B^K_{t_i}, B^K_{t_j}) on the grid.

    fBm uses the closed form; other kernels integrate int_0^{min} K(t_i,u) K(t_j,u) du.

    Args:
        spec (KernelSpec): kernel
        grid (TimeGrid): grid starting after 0
        quad_points (int): starting quadrature size
        threads (int): worker threads for the row-wise quadrature

    Returns:
        np.ndarray: symmetric (n, n) matrix
    """
    points = grid.points
    if isinstance(spec, FbmVolterra):
        return fbm_covariance(spec.hurst, points[:, None], points[None, :])

    n = points.size

    def row(i):
        values = np.empty(i + 1)
        for j in range(i + 1):
            values[j] = cross_integral(spec, points[i], spec, points[j], 0.0, points[j], quad_points)[0]
        return values

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(n)))
    else:
        rows = [row(i) for i in range(n)]

    matrix = np.zeros((n, n))
    for i, values in enumerate(rows):
        matrix[i, :i + 1] = values
        matrix[:i + 1, i] = values
    return matrix


def cholesky_factor(matrix: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor after the jitter policy (1e-12 trace/n, then 1e-10 max diagonal).

    Args:
        matrix (np.ndarray): symmetric positive semi-definite matrix

    Returns:
        np.ndarray: lower-triangular L with L L^T = matrix + jitter I
    """
    n = matrix.shape[0]
    jitters = (
        APP_SETTINGS.JITTER_INITIAL * np.trace(matrix) / n,
        APP_SETTINGS.JITTER_ESCALATED * np.max(np.diag(matrix)),
    )
    for attempt, jitter in enumerate(jitters):
        try:
            return linalg.cholesky(matrix + jitter * np.eye(n), lower=True)
        except linalg.LinAlgError:
            if attempt == 0:
                logger.warning(f"Cholesky failed with jitter {jitter:.3e}, escalating")
    logger.error("Covariance matrix is not positive definite after jitter escalation")
    raise NotPositiveDefinite("covariance matrix could not be factorized after jitter escalation")
