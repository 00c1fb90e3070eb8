"""
Gauss-Jacobi product rules for integrands with power-law endpoint behavior.

Kernel integrals behave like (t-s)^{2H-1} at the diagonal and like a power of s
near the origin; the Jacobi weight absorbs both exponents exactly so the
remaining factor is smooth.
"""
import logging
from functools import lru_cache
import numpy as np
from scipy import special
from model.errors import QuadratureError
import config.app_settings as APP_SETTINGS

logger = logging.getLogger(__name__)


@lru_cache(maxsize=256)
def jacobi_rule(n: int, alpha: float, beta: float):
    """
    Nodes and weights on [-1, 1] for the weight (1-x)^alpha (1+x)^beta.

    Args:
        n (int): number of nodes
        alpha (float): exponent at x = 1, > -1
        beta (float): exponent at x = -1, > -1

    Returns:
        tuple: (nodes, weights) as read-only arrays
    """
    if alpha == 0.0 and beta == 0.0:
        nodes, weights = special.roots_legendre(n)
    else:
        nodes, weights = special.roots_jacobi(n, alpha, beta)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=16)
def legendre_rule(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    return jacobi_rule(n, 0.0, 0.0)


def jacobi_integral(g, lo: float, hi: float, upper_exponent: float, lower_exponent: float, n: int) -> float:
    """
    Integrate (hi - s)^upper_exponent (s - lo)^lower_exponent g(s) over [lo, hi].

    Args:
        g (callable): vectorized smooth factor
        lo (float): lower limit
        hi (float): upper limit
        upper_exponent (float): power at s = hi
        lower_exponent (float): power at s = lo
        n (int): number of nodes

    Returns:
        float: the n-point approximation
    """
    nodes, weights = jacobi_rule(int(n), float(upper_exponent), float(lower_exponent))
    half = 0.5 * (hi - lo)
    s = lo + half * (1.0 + nodes)
    scale = half ** (1.0 + upper_exponent + lower_exponent)
    return float(scale * np.dot(weights, g(s)))


def certified_jacobi_integral(
    g,
    lo: float,
    hi: float,
    upper_exponent: float = 0.0,
    lower_exponent: float = 0.0,
    n: int = None,
    rel_tol: float = None
):
    """
    Jacobi integral with an n versus 2n error estimate, doubling until the estimate passes.

    Args:
        g (callable): vectorized smooth factor
        lo (float): lower limit
        hi (float): upper limit
        upper_exponent (float): power at s = hi
        lower_exponent (float): power at s = lo
        n (int): starting number of nodes
        rel_tol (float): relative error target

    Returns:
        tuple: (value, error_estimate)
    """
    n = int(n or APP_SETTINGS.QUADRATURE_POINTS)
    rel_tol = APP_SETTINGS.QUADRATURE_REL_TOL if rel_tol is None else rel_tol
    if hi <= lo:
        return 0.0, 0.0

    coarse = jacobi_integral(g, lo, hi, upper_exponent, lower_exponent, n)
    while True:
        fine = jacobi_integral(g, lo, hi, upper_exponent, lower_exponent, 2 * n)
        error = abs(fine - coarse)
        if error <= rel_tol * abs(fine) or abs(fine) <= APP_SETTINGS.QUADRATURE_ABS_FLOOR:
            return fine, error
        n *= 2
        if 2 * n > APP_SETTINGS.QUADRATURE_MAX_POINTS:
            logger.error(f"Quadrature on [{lo}, {hi}] stalled at relative error {error / abs(fine):.3e}")
            raise QuadratureError(
                f"relative error {error / abs(fine):.3e} exceeds {rel_tol:.1e} on [{lo}, {hi}]"
            )
        logger.debug(f"Refining quadrature on [{lo}, {hi}] to {2 * n} nodes")
        coarse = fine
