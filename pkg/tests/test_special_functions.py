"""
Gauss hypergeometric and log-gamma evaluation checked against mpmath.
"""
import math

import numpy as np
import pytest

from model.errors import ConvergenceError, DomainError
from utils.numerics.special_functions import HypergeometricArgs, gauss_2f1, gauss_2f1_array, ln_gamma

mpmath = pytest.importorskip("mpmath")


# (a, b, c, z): kernel parameters for a few H, then generic ones on both branches
CASES = [
    (-0.25, 0.25, 0.75, -3.0),
    (-0.25, 0.25, 0.75, -0.2),
    (0.2, -0.2, 1.2, -50.0),
    (0.45, -0.45, 0.95, -0.999),
    (0.3, 0.7, 1.9, 0.8),
    (0.3, 0.7, 1.9, 0.1),
    (1.0, 1.0, 2.0, 0.9),
    (0.5, 1.5, 2.25, -7.5),
]


def _random_cases(count: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    a = rng.uniform(-0.9, 0.9, count)
    b = rng.uniform(-0.9, 0.9, count)
    c = rng.uniform(0.2, 3.0, count)
    z = rng.uniform(-50.0, 0.999, count)
    return [tuple(float(v) for v in row) for row in zip(a, b, c, z)]


class TestGauss2F1:
    """F(a, b, c, z) on z < 1."""

    @pytest.mark.parametrize("a, b, c, z", CASES)
    def test_matches_mpmath(self, a, b, c, z):
        expected = float(mpmath.hyp2f1(a, b, c, z))
        value = gauss_2f1(HypergeometricArgs(a, b, c, z))
        assert value == pytest.approx(expected, rel=1e-10)

    def test_vectorized_agrees_with_scalar(self):
        zs = [-10.0, -1.0, -0.1, 0.0, 0.4, 0.7]
        values = gauss_2f1_array(-0.2, 0.2, 0.8, zs)
        for z, value in zip(zs, values):
            assert value == pytest.approx(gauss_2f1(HypergeometricArgs(-0.2, 0.2, 0.8, z)), rel=1e-12)

    def test_log_closed_form(self):
        # F(1, 1, 2, z) = -log(1 - z) / z
        z = -2.5
        assert gauss_2f1(HypergeometricArgs(1, 1, 2, z)) == pytest.approx(-math.log(1.0 - z) / z, rel=1e-12)

    def test_zero_argument_is_one(self):
        assert gauss_2f1(HypergeometricArgs(0.3, 0.4, 0.5, 0.0)) == 1.0

    @pytest.mark.parametrize("c", [0.0, -1.0, -3.0])
    def test_rejects_nonpositive_integer_c(self, c):
        with pytest.raises(DomainError):
            gauss_2f1(HypergeometricArgs(0.5, 0.5, c, 0.1))

    @pytest.mark.parametrize("z", [1.0, 1.5])
    def test_rejects_z_at_or_above_one(self, z):
        with pytest.raises(DomainError):
            gauss_2f1(HypergeometricArgs(0.5, 0.5, 1.5, z))

    def test_array_rejects_nan(self):
        with pytest.raises(DomainError):
            gauss_2f1_array(0.5, 0.5, 1.5, [0.1, float("nan")])

    @pytest.mark.parametrize("a, b, c, z", _random_cases(40, 2718))
    def test_symmetric_in_numerator_parameters(self, a, b, c, z):
        # for z < 0 the two orders go through different Pfaff images
        swapped = gauss_2f1(HypergeometricArgs(b, a, c, z))
        assert gauss_2f1(HypergeometricArgs(a, b, c, z)) == pytest.approx(swapped, rel=1e-12, abs=1e-12)

    def test_integer_gap_near_one_exceeds_the_term_cap(self):
        """c - a - b = 0 disables the connection formula, so w = 0.999 needs more terms than allowed."""
        with pytest.raises(ConvergenceError):
            gauss_2f1(HypergeometricArgs(0.5, 0.5, 1.0, 0.999))


class TestLnGamma:
    def test_matches_lgamma(self):
        for x in (0.1, 0.5, 1.0, 2.5, 40.0):
            assert ln_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-12)

    def test_factorial(self):
        assert ln_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-12)

    @pytest.mark.parametrize("x", np.linspace(0.1, 50.0, 25).tolist())
    def test_recurrence(self, x):
        assert abs(ln_gamma(x + 1.0) - ln_gamma(x) - math.log(x)) <= 1e-12

    @pytest.mark.parametrize("x", [0.0, -1.5])
    def test_rejects_nonpositive(self, x):
        with pytest.raises(DomainError):
            ln_gamma(x)
