import math

import numpy as np
import pytest

from pamkit import (DistributionSpec, RVMetadata, de_bruijn_bounds,
                    kasahara_bounds, legendre_inf, lifshitz_envelope,
                    rate_function, shifted_rate_bounds)

U01 = DistributionSpec.uniform01()
DEXP = DistributionSpec.double_exponential(1.0)
WEIB = DistributionSpec.weibull_tail(2.0, 1.0)


class TestLegendreInf:
    def test_entropy_form(self):
        res = legendre_inf(lambda t: t * math.log(t) - t, 0.0)
        assert res.interior
        assert res.value == pytest.approx(-1.0, rel=1e-10)
        assert res.t_star == pytest.approx(1.0, rel=1e-6)

    def test_square_root(self):
        res = legendre_inf(lambda t: -math.sqrt(t), 1.0)
        assert res.value == pytest.approx(-0.25, rel=1e-10)
        assert res.t_star == pytest.approx(0.25, rel=1e-6)

    def test_monotone_boundary(self):
        res = legendre_inf(lambda t: 0.0, 1.0)
        assert not res.interior
        assert res.boundary == "t->0"
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_runaway_boundary(self):
        res = legendre_inf(lambda t: -2.0 * t, 1.0)
        assert not res.interior
        assert res.boundary == "t->inf"

    def test_lower_envelope_property(self, rng):
        fn = lambda t: t * math.log(t) - t
        res = legendre_inf(fn, 0.7)
        for t in rng.uniform(1e-4, 1e4, 200):
            assert res.value <= 0.7 * t + fn(t) + 1e-12


class TestRateFunction:
    def test_point_mass_boundary(self):
        res = rate_function(DistributionSpec.point_mass(1.0), 3.0)
        assert not res.interior
        assert res.value == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("E", [-2.0, 0.0, 1.0])
    def test_double_exponential_closed_form(self, E):
        res = rate_function(DEXP, E)
        assert res.value == pytest.approx(-math.exp(-E), rel=1e-8)
        assert res.t_star == pytest.approx(math.exp(-E), rel=1e-5)

    def test_double_exponential_scaled(self):
        # with rate c the transform is -exp(-E/c) at minimizer exp(-E/c)/c
        res = rate_function(DistributionSpec.double_exponential(2.0), -1.0)
        assert res.value == pytest.approx(-math.exp(0.5), rel=1e-8)
        assert res.t_star == pytest.approx(math.exp(0.5) / 2.0, rel=1e-5)

    def test_exact_form_differs_for_dexp(self):
        canonical = rate_function(DEXP, 0.0)
        exact = rate_function(DEXP, 0.0, form="exact")
        assert canonical.value == pytest.approx(-1.0, rel=1e-8)
        assert exact.value > canonical.value  # the true cumulant sits higher

    def test_negative_transform_is_convex(self):
        es = np.linspace(-2.0, 1.0, 13)
        vals = np.array([-rate_function(DEXP, e).value for e in es])
        second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
        assert np.all(second >= -1e-8)


class TestShiftedRateBounds:
    def test_unit_shifts_collapse(self):
        res = shifted_rate_bounds(DEXP, -1.0, 1.0, 1.0, d=1)
        target = -rate_function(DEXP, -1.0 - 2.0).value
        assert res.lower == pytest.approx(target, rel=1e-12)
        assert res.upper == pytest.approx(target, rel=1e-12)

    def test_double_exponential_pattern(self):
        chi = 0.8
        res = shifted_rate_bounds(DEXP, -0.5, chi, chi, d=1)
        assert res.upper == pytest.approx(math.exp(-(-0.5 - 2 * chi)), rel=1e-8)

    def test_constant_scales_lower(self):
        res = shifted_rate_bounds(DEXP, -1.0, 1.0, 1.0, d=1, constant=2.5)
        assert res.lower == pytest.approx(2.5 * res.upper, rel=1e-12)

    def test_vanishes_off_the_tail(self):
        # nonnegative single-site law: for large E the transform degenerates
        res = shifted_rate_bounds(U01, 50.0, 1.0, 1.0, d=1)
        assert res.lower == pytest.approx(0.0, abs=1e-10)
        assert res.upper == pytest.approx(0.0, abs=1e-10)


class TestOscillationBounds:
    @pytest.mark.parametrize("rho", [0.3, 0.5, 0.7])
    def test_power_law_closed_form(self, rho):
        E = 0.23
        res = de_bruijn_bounds(lambda t: t**rho, 1.0, 1.0, E, rho)
        exact = -(1 - rho) * rho ** (rho / (1 - rho)) * E ** (-rho / (1 - rho))
        assert res.infimum == pytest.approx(exact, rel=1e-8)

    def test_sqrt_inf(self):
        E = 0.8
        res = de_bruijn_bounds(lambda t: math.sqrt(t), 2.0, 1.0, E, 0.5)
        assert res.infimum == pytest.approx(-1.0 / (4 * E), rel=1e-10)

    def test_collapse_when_equal(self):
        res = de_bruijn_bounds(lambda t: t**0.5, 1.5, 1.5, 0.4, 0.5)
        assert res.lower == res.upper
        assert res.c1 == res.c2

    def test_ordering_validation(self):
        with pytest.raises(ValueError):
            de_bruijn_bounds(lambda t: t**0.5, 1.0, 2.0, 0.4, 0.5)
        with pytest.raises(ValueError):
            de_bruijn_bounds(lambda t: t**0.5, 1.0, 1.0, 0.4, 1.5)

    def test_kasahara_square(self):
        res = kasahara_bounds(lambda t: t * t, 1.0, 1.0, -2.0, 2.0)
        assert res.infimum == pytest.approx(-1.0, rel=1e-10)
        assert res.t_star == pytest.approx(1.0, rel=1e-6)
        assert res.lower == res.upper

    def test_kasahara_zero_energy_boundary(self):
        res = kasahara_bounds(lambda t: t * t, 1.0, 1.0, 0.0, 2.0)
        assert not res.interior
        assert res.infimum == pytest.approx(0.0, abs=1e-12)

    def test_kasahara_validation(self):
        with pytest.raises(ValueError):
            kasahara_bounds(lambda t: t * t, 1.0, 1.0, -1.0, 0.9)


class TestLifshitzEnvelope:
    def test_pure_power_auxiliary(self):
        md = RVMetadata(-1.0, 1.0, g=lambda t: 1.0 / t, g0=lambda t: 1.0)
        for E in (0.01, 0.001):
            res = lifshitz_envelope(None, E, 1, metadata=md)
            assert res.t_star == pytest.approx(E ** -1.5, rel=1e-9)
            assert res.envelope == pytest.approx(E ** -0.5, rel=1e-9)
            assert res.t_star_closed_form == pytest.approx(res.t_star, rel=1e-9)
            assert res.residual <= 1e-10

    def test_uniform_log_correction_trend(self):
        ratios = []
        gaps = []
        for E in (1e-4, 1e-8, 1e-12):
            res = lifshitz_envelope(U01, E, 1)
            assert res.residual <= 1e-10
            ratios.append(res.envelope / (E ** -0.5 * (-math.log(E))))
            gaps.append(abs(res.t_star - res.t_star_closed_form) / res.t_star)
        # the envelope tracks E^-1/2 log(1/E) up to a constant drifting to 3/2
        assert ratios == sorted(ratios, reverse=True)
        assert ratios[-1] > 1.5
        assert ratios[0] < 2.0
        # the closed-form asymptotic inverse converges to the bisection root
        assert gaps == sorted(gaps, reverse=True)

    def test_wrong_regime(self):
        with pytest.raises(ValueError):
            lifshitz_envelope(WEIB, 0.01, 1)
        with pytest.raises(ValueError):
            lifshitz_envelope(DistributionSpec.point_mass(0.0), 0.01, 1)

    def test_not_bracketed(self):
        with pytest.raises(ValueError):
            lifshitz_envelope(U01, 0.9, 1)  # target above g on the branch
