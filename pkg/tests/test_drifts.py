"""
Drift catalog, assumption checks, mollification and the Lamperti change of variable.
"""
import math

import numpy as np
import pytest

from model.drift import (
    AffineFunction,
    ConstantFunction,
    DirichletDrift,
    DirichletTerm,
    FiniteSetApprox,
    IndicatorComplementDrift,
    Interval,
    PiecewiseDrift,
    SignDrift,
    SmoothDrift,
)
from model.errors import DomainError, UnboundedDrift
from service import drift_service

T_SAMPLES = np.linspace(0.0, 1.0, 5)


class TestCatalog:
    def test_sign_is_zero_at_the_jump(self):
        drift = SignDrift(scale=2.0, shift=0.5)
        np.testing.assert_array_equal(drift.evaluate(0.0, np.array([0.0, 0.5, 1.0])), [-2.0, 0.0, 2.0])
        assert drift.sup_bound() == 2.0
        assert drift.breakpoints() == [0.5]

    def test_piecewise_is_right_continuous(self):
        drift = PiecewiseDrift([0.0], [ConstantFunction(1.0), ConstantFunction(-1.0)], growth_constant=1.0)
        np.testing.assert_array_equal(drift.evaluate(0.0, np.array([-0.5, 0.0, 0.5])), [1.0, -1.0, -1.0])
        assert drift.sup_bound() == 1.0

    def test_piecewise_with_affine_piece_is_unbounded(self):
        drift = PiecewiseDrift([0.0], [ConstantFunction(0.0), AffineFunction(0.0, 1.0)], growth_constant=1.0)
        assert math.isinf(drift.sup_bound())
        assert drift.piece_is_affine(1)

    def test_piecewise_shape_checks(self):
        with pytest.raises(DomainError):
            PiecewiseDrift([1.0, 0.0], [ConstantFunction(0.0)] * 3, 1.0)
        with pytest.raises(DomainError):
            PiecewiseDrift([0.0], [ConstantFunction(0.0)], 1.0)

    def test_rationals_membership(self):
        rationals = FiniteSetApprox.rationals(2, 2)
        assert rationals.contains(0.5)
        assert not rationals.contains(0.3)
        assert not rationals.contains(math.sqrt(2.0) / 2.0)

    def test_fattened_membership(self):
        members = FiniteSetApprox([0.0, 1.0], fattening=0.05)
        np.testing.assert_array_equal(members.contains(np.array([0.04, 0.06, 0.97])), [True, False, True])

    def test_negative_fattening(self):
        with pytest.raises(DomainError):
            FiniteSetApprox([0.0], fattening=-0.1)

    def test_indicator_complement(self):
        drift = IndicatorComplementDrift(FiniteSetApprox([0.0, 1.0 / 3.0]))
        values = drift.evaluate(0.0, np.array([1.0 / 3.0, 0.5, 0.0]))
        np.testing.assert_array_equal(values, [0.0, 1.0, 0.0])
        assert drift.sup_bound() == 1.0

    def test_dirichlet_sums_terms(self):
        drift = DirichletDrift([
            DirichletTerm(ConstantFunction(2.0), math.inf, FiniteSetApprox([0.5])),
            DirichletTerm(ConstantFunction(3.0), 2.0, FiniteSetApprox([0.5, 0.25])),
        ])
        np.testing.assert_array_equal(drift.evaluate(0.0, np.array([0.5, 0.25, 0.1])), [5.0, 3.0, 0.0])
        assert drift.sup_bound() == 5.0

    def test_dirichlet_exponent(self):
        with pytest.raises(DomainError):
            DirichletTerm(ConstantFunction(1.0), 1.0, FiniteSetApprox([0.5]))

    def test_interval(self):
        region = Interval(0.0, 1.0)
        np.testing.assert_array_equal(region.contains(np.array([0.0, 0.5, 1.0])), [True, True, False])

    def test_registry(self):
        drift = drift_service.smooth_drift('tanh', scale=2.0)
        assert isinstance(drift, SmoothDrift)
        assert drift_service.eval_drift(drift, 0.0, 0.0) == 0.0
        assert drift.sup_bound() == 2.0
        with pytest.raises(DomainError):
            drift_service.smooth_drift('cubic')


class TestAssumptionChecks:
    def test_linear_growth(self):
        x = np.linspace(-5.0, 5.0, 101)
        assert drift_service.check_linear_growth(SignDrift(), 1.0, T_SAMPLES, x)
        assert not drift_service.check_linear_growth(drift_service.smooth_drift('linear', slope=2.0), 1.0, T_SAMPLES, x)

    def test_bounded(self):
        x = np.linspace(-5.0, 5.0, 101)
        assert drift_service.check_bounded(SignDrift(), T_SAMPLES, x)
        assert not drift_service.check_bounded(drift_service.smooth_drift('linear'), T_SAMPLES, x)

    def test_piecewise_lipschitz_skips_the_jump(self):
        x = np.array([-1.0, -0.5, -0.25, 0.25, 0.5, 1.0])
        assert drift_service.check_piecewise_lipschitz(SignDrift(), 0.0, T_SAMPLES, x)

    def test_lipschitz_constant_of_tanh(self):
        x = np.linspace(-2.0, 2.0, 401)
        drift = drift_service.smooth_drift('tanh')
        assert drift_service.check_piecewise_lipschitz(drift, 1.0, T_SAMPLES, x)
        assert not drift_service.check_piecewise_lipschitz(drift, 0.5, T_SAMPLES, x)

    def test_empty_samples(self):
        with pytest.raises(DomainError):
            drift_service.check_bounded(SignDrift(), [], [0.0])


class TestMollify:
    def test_keeps_the_bound(self):
        smoothed = drift_service.mollify(SignDrift(), 8)
        values = smoothed.evaluate(0.0, np.linspace(-2.0, 2.0, 801))
        assert np.max(np.abs(values)) <= 1.0 + 1e-12
        assert smoothed.sup_bound() == 1.0
        assert math.isfinite(smoothed.lipschitz)

    def test_symmetric_bump_is_odd_on_sign(self):
        smoothed = drift_service.mollify(SignDrift(), 4)
        assert abs(smoothed.evaluate(0.0, np.array([0.0]))[0]) < 1e-12
        # the bump has width 2/n, so far from the jump nothing changes
        assert smoothed.evaluate(0.0, np.array([1.0]))[0] == pytest.approx(1.0, abs=1e-12)

    def test_one_sided_bump_looks_left(self):
        smoothed = drift_service.mollify(SignDrift(), 4, shape="one_sided")
        # every offset lies in (0, 1/2), so x - y < 0 at x = 0
        assert smoothed.evaluate(0.0, np.array([0.0]))[0] == pytest.approx(-1.0, abs=1e-12)

    def test_smooth_drift_is_returned_unchanged(self):
        drift = drift_service.smooth_drift('sine')
        assert drift_service.mollify(drift, 4) is drift

    def test_unbounded_drift(self):
        drift = PiecewiseDrift([0.0], [ConstantFunction(0.0), AffineFunction(0.0, 1.0)], growth_constant=1.0)
        with pytest.raises(UnboundedDrift):
            drift_service.mollify(drift, 4)

    def test_invalid_index_and_shape(self):
        with pytest.raises(DomainError):
            drift_service.mollify(SignDrift(), 0)
        with pytest.raises(DomainError):
            drift_service.mollify(SignDrift(), 4, shape="triangular")

    def test_time_arrays_broadcast(self):
        smoothed = drift_service.mollify(SignDrift(), 4)
        t = np.array([[0.0, 0.5], [1.0, 1.0]])
        x = np.array([[-1.0, 1.0], [2.0, -2.0]])
        np.testing.assert_allclose(smoothed.evaluate(t, x), [[-1.0, 1.0], [1.0, -1.0]], atol=1e-12)


class TestLamperti:
    def test_constant_sigma_scales(self):
        forward, inverse, transformed = drift_service.lamperti_transform(
            lambda x: 2.0 + 0.0 * x, (2.0, 2.0), SignDrift()
        )
        assert float(forward(np.asarray(1.0))) == pytest.approx(0.5, abs=1e-10)
        assert float(inverse(np.asarray(0.5))) == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(transformed.evaluate(0.0, np.array([-1.0, 1.0])), [-0.5, 0.5])
        assert transformed.sup_bound() == 0.5

    def test_forward_is_increasing(self):
        forward, inverse, _ = drift_service.lamperti_transform(
            lambda x: 1.5 + 0.5 * np.sin(x), (1.0, 2.0), SignDrift()
        )
        x = np.linspace(-3.0, 3.0, 61)
        y = forward(x)
        assert np.all(np.diff(y) > 0.0)
        assert abs(float(forward(np.asarray(0.0)))) < 1e-12
        np.testing.assert_allclose(inverse(y), x, atol=1e-9)

    def test_sigma_outside_bounds(self):
        with pytest.raises(DomainError):
            drift_service.lamperti_transform(lambda x: 1.0 + 0.0 * x, (2.0, 3.0), SignDrift())

    def test_invalid_bounds(self):
        with pytest.raises(DomainError):
            drift_service.lamperti_transform(lambda x: 1.0 + 0.0 * x, (0.0, 1.0), SignDrift())
