"""
Monte Carlo estimators: small-ball probabilities, occupation times, Krylov functionals,
L2 distances, stochastic Besov norms, convergence studies and moment checks.
"""
import logging
import math
import numpy as np
from scipy import stats
from model.errors import DomainError, InsufficientSamples, MismatchedEnsembles
from model.path import Ensemble, SamplePath, TimeGrid
from model.report import BesovEstimate, McReport, MomentEstimate, NormalityReport, SlopeFit
from service.path_service import holder_constants
from utils.numerics.quadrature import legendre_rule
import config.app_settings as APP_SETTINGS

logger = logging.getLogger(__name__)


def fit_slope(xs, ys) -> SlopeFit:
    """
    Ordinary least squares of log y against log x.

    Args:
        xs (array_like): positive abscissae
        ys (array_like): positive ordinates

    Returns:
        SlopeFit: slope, intercept, r^2 and the log-log points
    """
    log_x = np.log(np.asarray(xs, dtype=float))
    log_y = np.log(np.asarray(ys, dtype=float))
    if log_x.size < 3:
        raise InsufficientSamples(f"a slope fit needs at least 3 points, got {log_x.size}")
    fit = stats.linregress(log_x, log_y)
    return SlopeFit(fit.slope, fit.intercept, fit.rvalue ** 2, list(zip(log_x, log_y)))


def mean_report(samples, seed: int, extras: dict = None) -> McReport:
    """Sample mean with its standard error std / sqrt(n)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise InsufficientSamples(f"a Monte Carlo report needs at least 2 samples, got {samples.size}")
    return McReport(samples.mean(), samples.std(ddof=1) / math.sqrt(samples.size), samples.size, seed, extras)


def product_moment(a, b, seed: int) -> McReport:
    """
    E[A B] for centered samples, e.g. a variance (a is b) or a covariance.

    Args:
        a (array_like): first samples
        b (array_like): second samples, paired with a

    Returns:
        McReport: sample mean of a * b and its standard error
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise MismatchedEnsembles(f"paired samples differ in shape: {a.shape} vs {b.shape}")
    return mean_report(a * b, seed)


def centering_statistic(ensemble: Ensemble) -> float:
    """max over grid points of |sample mean| / standard error."""
    values = ensemble.values
    if values.shape[0] < 2:
        raise InsufficientSamples("centering needs at least 2 paths")
    spread = values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
    means = np.abs(values.mean(axis=0))
    scaled = np.divide(means, spread, out=np.zeros_like(means), where=spread > 0.0)
    return float(scaled.max())


#-------------------------------------
# Small balls and occupation
#-------------------------------------
def small_ball_probability(ensemble: Ensemble, t: float, x: float, alphas: list, min_hits: int = None) -> tuple:
    """
    Frequencies of X_t in (x, x + alpha) and their log-log slope.

    Args:
        ensemble (Ensemble): solution paths
        t (float): grid time
        x (float): left end of the balls
        alphas (list): decreasing positive widths
        min_hits (int): count floor for a width to enter the slope fit

    Returns:
        tuple: (list of McReport per alpha, SlopeFit over the qualifying widths)
    """
    alphas = [float(a) for a in alphas]
    if any(a <= 0.0 for a in alphas) or any(b >= a for a, b in zip(alphas, alphas[1:])):
        raise DomainError("alphas must be positive and strictly decreasing")
    min_hits = APP_SETTINGS.SMALL_BALL_MIN_HITS if min_hits is None else min_hits
    values = ensemble.at(t)
    n = values.size

    reports = []
    qualifying = []
    for alpha in alphas:
        hits = int(np.count_nonzero((values > x) & (values < x + alpha)))
        p = hits / n
        reports.append(McReport(p, math.sqrt(p * (1.0 - p) / n), n, ensemble.master_seed,
                                {'alpha': alpha, 'hits': hits}))
        if hits >= min_hits:
            qualifying.append((alpha, p))

    if len(qualifying) < 3:
        logger.error(f"Only {len(qualifying)} widths reach {min_hits} hits at t={t}")
        raise InsufficientSamples(f"fewer than 3 widths reach the floor of {min_hits} hits")
    fit = fit_slope([a for a, _ in qualifying], [p for _, p in qualifying])
    return reports, fit


def occupation_bound_ratios(reports: list, t: float, hurst: float) -> list:
    """p_hat / (t^{-H} alpha^{1-H}) per width."""
    return [r.estimate / (t ** (-hurst) * r.extras['alpha'] ** (1.0 - hurst)) for r in reports]


def gaussian_band_probability(variance: float, x: float, alpha: float, mean: float = 0.0) -> float:
    """P(G in (x, x + alpha)) for G ~ Normal(mean, variance)."""
    scale = math.sqrt(variance)
    return float(stats.norm.cdf(x + alpha, mean, scale) - stats.norm.cdf(x, mean, scale))


def occupation_time(path: SamplePath, region) -> float:
    """
    Delta times the number of grid points at which the path lies in region.

    Args:
        path (SamplePath): path
        region (FiniteSetApprox | Interval): any object with a vectorized contains()

    Returns:
        float: left-rectangle occupation measure
    """
    return path.grid.step * int(np.count_nonzero(region.contains(path.values)))


def occupation_times(ensemble: Ensemble, region) -> np.ndarray:
    """Occupation time of every path of an ensemble."""
    return ensemble.grid.step * np.count_nonzero(region.contains(ensemble.values), axis=1)


def krylov_functional(g, q: float, hurst: float, support: tuple, ensemble: Ensemble, quad_points: int = 64) -> McReport:
    """
    Estimate E[int_0^T g(t, X_t) dt] and report (int int g^q)^{1/q} alongside.

    Args:
        g (callable): vectorized g(t, x) >= 0
        q (float): integrability exponent, q > 1 + H
        hurst (float): H of the driving noise
        support (tuple): (x_lo, x_hi) box containing the x-support of g
        ensemble (Ensemble): solution paths
        quad_points (int): Gauss-Legendre nodes per axis for the L^q norm

    Returns:
        McReport: estimate with extras 'lq_norm' and 'q'
    """
    if not q > 1.0 + hurst:
        raise DomainError(f"Krylov functional needs q > 1 + H = {1.0 + hurst}, got {q}")
    grid = ensemble.grid
    times = np.broadcast_to(grid.points, ensemble.values.shape)
    integrals = grid.step * np.asarray(g(times, ensemble.values), dtype=float).sum(axis=1)

    x_lo, x_hi = support
    nodes, weights = legendre_rule(quad_points)
    t_nodes = 0.5 * grid.horizon * (1.0 + nodes)
    x_nodes = x_lo + 0.5 * (x_hi - x_lo) * (1.0 + nodes)
    t_mesh, x_mesh = np.meshgrid(t_nodes, x_nodes, indexing='ij')
    values = np.abs(np.asarray(g(t_mesh, x_mesh), dtype=float)) ** q
    area = 0.25 * grid.horizon * (x_hi - x_lo)
    lq_norm = float(area * weights @ values @ weights) ** (1.0 / q)

    return mean_report(integrals, ensemble.master_seed, {'lq_norm': lq_norm, 'q': q})


#-------------------------------------
# Distances and Besov norms
#-------------------------------------
def _check_paired(a: Ensemble, b: Ensemble):
    if a.grid != b.grid:
        raise MismatchedEnsembles("ensembles live on different grids")
    if a.master_seed != b.master_seed or not np.array_equal(a.path_indices, b.path_indices):
        raise MismatchedEnsembles("ensembles are not paired by seed")


def l2_distance(a: Ensemble, b: Ensemble, t: float) -> McReport:
    """
    Sample mean of (A_t - B_t)^2 over seed-paired paths.

    Returns:
        McReport: the estimate and its standard error
    """
    _check_paired(a, b)
    return mean_report((a.at(t) - b.at(t)) ** 2, a.master_seed)


def difference(a: Ensemble, b: Ensemble) -> Ensemble:
    """Seed-paired difference A - B, origins included."""
    _check_paired(a, b)
    return a.derive(a.values - b.values, origin=a.origins() - b.origins())


def besov_norm(ensemble: Ensemble, beta: float, last_cell: str = "interpolate") -> BesovEstimate:
    """
    sup_t (E[Y_t^2] + E[(int_0^t |Y_t - Y_s| / (t-s)^{1+beta} ds)^2]) on the grid.

    The inner integral is a left-rectangle sum over the s-cells before t - Delta. The
    cell (t - Delta, t) is either integrated for the linear interpolant of the path
    ("interpolate") or dropped ("exclude", a lower bound flagged by grid_bias_note).

    Args:
        ensemble (Ensemble): paths Y
        beta (float): Besov parameter in (0, 1)
        last_cell (str): "interpolate" or "exclude"

    Returns:
        BesovEstimate: profile over the grid and its maximum
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"Besov parameter must lie in (0,1), got {beta}")
    if last_cell not in ("interpolate", "exclude"):
        raise DomainError(f"unknown last-cell policy '{last_cell}'")

    values = ensemble.with_origin()
    step = ensemble.grid.step
    inner = np.zeros_like(values)
    for lag in range(2, values.shape[1]):
        inner[:, lag:] += np.abs(values[:, lag:] - values[:, :-lag]) * step / (lag * step) ** (1.0 + beta)
    if last_cell == "interpolate":
        inner[:, 1:] += np.abs(np.diff(values, axis=1)) * step ** (-beta) / (1.0 - beta)

    profile_values = np.mean(values[:, 1:] ** 2, axis=0) + np.mean(inner[:, 1:] ** 2, axis=0)
    profile = list(zip(ensemble.grid.points.tolist(), profile_values.tolist()))
    return BesovEstimate(beta, profile, last_cell == "exclude")


def holder_statistic(ensemble_h1: Ensemble, ensemble_h2: Ensemble, gamma: float) -> float:
    """Mean over paths of max(Hoelder constant of B^{H1}, Hoelder constant of B^{H2})."""
    step = ensemble_h1.grid.step
    first = holder_constants(ensemble_h1.with_origin(), step, gamma)
    second = holder_constants(ensemble_h2.with_origin(), step, gamma)
    return float(np.mean(np.maximum(first, second)))


def convergence_study(ensembles: dict, ns: list, beta: float, h1: float, gamma: float = None) -> tuple:
    """
    l2 distance at T and Besov norm of X^N - X^infinity for each N, with the l2 slope in N.

    Args:
        ensembles (dict): output of SolverService.mixed_ensembles
        ns (list): increasing stabilization indices
        beta (float): Besov parameter in (0, H1)
        h1 (float): stabilizing Hurst index
        gamma (float): Hoelder exponent of the modulus statistic, default H1 / 2

    Returns:
        tuple: (list of row dicts, SlopeFit of log l2 against log N or None for zero distances)
    """
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise DomainError("Ns must be increasing")
    if not 0.0 < beta < h1:
        raise DomainError(f"Besov parameter must lie in (0, H1={h1}), got {beta}")

    reference = ensembles['reference']
    horizon = reference.grid.horizon
    modulus = holder_statistic(ensembles['h1'], ensembles['h2'], gamma or 0.5 * h1)
    rows = []
    for n in ns:
        l2 = l2_distance(ensembles[n], reference, horizon)
        besov = besov_norm(difference(ensembles[n], reference), beta)
        rows.append({
            'n': n,
            'l2': l2.estimate,
            'l2_se': l2.std_error,
            'besov': besov.norm_value,
            'holder_modulus': modulus
        })
        logger.info(f"N={n}: l2={l2.estimate:.6g} (se {l2.std_error:.2g}), besov={besov.norm_value:.6g}")

    distances = [row['l2'] for row in rows]
    fit = fit_slope(ns, distances) if len(ns) >= 3 and min(distances) > 0.0 else None
    return rows, fit


#-------------------------------------
# Moment checks
#-------------------------------------
def _moments(samples: np.ndarray) -> tuple:
    variance = samples.var(ddof=1)
    if variance == 0.0:
        return samples.mean(), variance, None, None
    return (
        samples.mean(),
        variance,
        stats.skew(samples, bias=False),
        stats.kurtosis(samples, fisher=True, bias=False)
    )


def normality_check(samples, blocks: int = None) -> NormalityReport:
    """
    Mean, variance, skewness and excess kurtosis with grouped jackknife standard errors.

    Args:
        samples (array_like): at least NORMALITY_MIN_SAMPLES values
        blocks (int): number of jackknife groups

    Returns:
        NormalityReport: moments; skewness and kurtosis undefined for constant samples
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < APP_SETTINGS.NORMALITY_MIN_SAMPLES:
        raise InsufficientSamples(
            f"normality check needs {APP_SETTINGS.NORMALITY_MIN_SAMPLES} samples, got {samples.size}"
        )
    blocks = blocks or APP_SETTINGS.JACKKNIFE_BLOCKS
    full = _moments(samples)
    groups = np.array_split(np.arange(samples.size), blocks)
    leave_out = [_moments(np.delete(samples, group)) for group in groups]

    estimates = []
    for position, value in enumerate(full):
        if value is None:
            estimates.append(MomentEstimate(None, None))
            continue
        replicates = np.array([row[position] for row in leave_out], dtype=float)
        spread = np.sum((replicates - replicates.mean()) ** 2)
        estimates.append(MomentEstimate(float(value), math.sqrt((blocks - 1) / blocks * spread)))
    return NormalityReport(*estimates, samples.size)
