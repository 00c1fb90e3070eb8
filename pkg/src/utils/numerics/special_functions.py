"""
Gauss hypergeometric and log-gamma evaluation for the fBm Volterra kernel.

The kernel only ever needs F(a, b, c, z) for z <= 0, so the evaluation maps the
argument onto [0, 1) with the Pfaff transformation and sums the power series
there. When the transformed argument is close to 1 (s much smaller than t) the
1-w connection formula is used so the series runs on [0, 1/2]. The exception is an
integer c - a - b, where the connection coefficients are singular: the plain series
runs on all of [0, 1) and raises ConvergenceError once w is too close to 1 for the
term cap. The fBm kernel never meets this case since its gap is H + 1/2 with H != 1/2.
"""
import logging
import numpy as np
from scipy import special
from model.errors import ConvergenceError, DomainError
import config.app_settings as APP_SETTINGS

logger = logging.getLogger(__name__)


class HypergeometricArgs:
    """
    Arguments of the Gauss hypergeometric function F(a, b, c, z).

    Attributes:
        a (float): first numerator parameter
        b (float): second numerator parameter
        c (float): denominator parameter, not zero or a negative integer
        z (float): argument, supported for z < 1
    """
    def __init__(self, a: float, b: float, c: float, z: float):
        self.a = float(a)
        self.b = float(b)
        self.c = float(c)
        self.z = float(z)

    def validate(self):
        _check_parameters(self.c)
        if self.z >= 1.0:
            raise DomainError(f"hypergeometric argument z={self.z} outside the supported range z < 1")

    def to_dict(self) -> dict:
        return {'a': self.a, 'b': self.b, 'c': self.c, 'z': self.z}


def gauss_2f1(args: HypergeometricArgs) -> float:
    """
    Evaluate F(a, b, c, z) for a single argument.

    Args:
        args (HypergeometricArgs): validated parameters and argument

    Returns:
        float: F(a, b, c, z) with relative error below 1e-10 on z < 1
    """
    args.validate()
    return float(gauss_2f1_array(args.a, args.b, args.c, np.asarray(args.z, dtype=float)))


def gauss_2f1_array(a: float, b: float, c: float, z) -> np.ndarray:
    """
    Vectorized F(a, b, c, z) over an array of arguments z < 1.

    Args:
        a (float): first numerator parameter
        b (float): second numerator parameter
        c (float): denominator parameter
        z (array_like): arguments, every entry < 1

    Returns:
        np.ndarray: values with the shape of z
    """
    _check_parameters(c)
    z = np.asarray(z, dtype=float)
    if np.any(z >= 1.0) or np.any(np.isnan(z)):
        raise DomainError("hypergeometric argument must satisfy z < 1")

    shape = z.shape
    z = np.atleast_1d(z).ravel()
    out = np.empty_like(z)
    negative = z < 0.0

    # Pfaff: F(a,b,c,z) = (1-z)^(-a) F(a, c-b, c, z/(z-1)) maps (-inf, 0) onto (0, 1)
    if np.any(negative):
        zn = z[negative]
        w = zn / (zn - 1.0)
        out[negative] = (1.0 - zn) ** (-a) * _unit_interval(a, c - b, c, w)
    if np.any(~negative):
        out[~negative] = _unit_interval(a, b, c, z[~negative])
    return out.reshape(shape)


def ln_gamma(x):
    """
    Natural log of the gamma function for positive arguments.

    Args:
        x (float | array_like): positive argument(s)

    Returns:
        float | np.ndarray: ln Gamma(x)
    """
    values = np.asarray(x, dtype=float)
    if np.any(values <= 0.0) or np.any(np.isnan(values)):
        raise DomainError(f"ln_gamma is only defined for x > 0, got {x}")
    result = special.gammaln(values)
    return float(result) if result.ndim == 0 else result


def _check_parameters(c: float):
    if c <= 0.0 and float(c).is_integer():
        raise DomainError(f"hypergeometric parameter c={c} must not be zero or a negative integer")


def _unit_interval(a: float, b: float, c: float, w: np.ndarray) -> np.ndarray:
    """F(a, b, c, w) for w in [0, 1), choosing the series or the connection formula per entry."""
    out = np.empty_like(w)
    gap = c - a - b
    threshold = APP_SETTINGS.HYPERGEOMETRIC_CONNECTION_THRESHOLD
    near_one = w > threshold
    if float(gap).is_integer():
        # Connection coefficients are singular here; the plain series covers [0,1) up to the term cap
        near_one = np.zeros_like(w, dtype=bool)

    if np.any(~near_one):
        out[~near_one] = _power_series(a, b, c, w[~near_one])
    if np.any(near_one):
        v = 1.0 - w[near_one]
        first = special.gamma(c) * special.gamma(gap) * special.rgamma(c - a) * special.rgamma(c - b)
        second = special.gamma(c) * special.gamma(-gap) * special.rgamma(a) * special.rgamma(b)
        value = first * _power_series(a, b, 1.0 - gap, v)
        if second != 0.0:
            value = value + second * v ** gap * _power_series(c - a, c - b, 1.0 + gap, v)
        out[near_one] = value
    return out


def _power_series(a: float, b: float, c: float, w: np.ndarray) -> np.ndarray:
    """Compensated (Kahan) summation of the hypergeometric power series for 0 <= w < 1."""
    if w.size == 0:
        return w.copy()

    tol = APP_SETTINGS.HYPERGEOMETRIC_TERM_TOL
    term = np.ones_like(w)
    total = np.ones_like(w)
    compensation = np.zeros_like(w)
    small_before = np.zeros_like(w, dtype=bool)

    for n in range(APP_SETTINGS.HYPERGEOMETRIC_MAX_TERMS):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * w
        y = term - compensation
        t = total + y
        compensation = (t - total) - y
        total = t

        small = np.abs(term) <= tol * np.abs(total)
        if np.all(small & small_before):
            return total
        small_before = small

    logger.error(f"Hypergeometric series did not converge for a={a}, b={b}, c={c}, max w={w.max()}")
    raise ConvergenceError(
        f"hypergeometric series exceeded {APP_SETTINGS.HYPERGEOMETRIC_MAX_TERMS} terms"
    )
