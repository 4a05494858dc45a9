import math

import numpy as np
import pytest

from diractrace.errors import DomainError
from diractrace.quadrature import quad_panels
from diractrace.windows import (
    WindowParams,
    even_window,
    sharp_indicator,
    smoothed_indicator,
    tail_envelope,
    window_transform,
    window_transform_deriv,
)

CONFIGS = [WindowParams(0, 1, 0.5), WindowParams(1, 3, 1.0), WindowParams(0, 10, 2.0)]


def indicator_convolution_oracle(p, lam, order=40):
    """Direct Gaussian-convolution quadrature t/sqrt(pi) int_a^b e^{-t^2 (lam-r)^2} dr."""
    edges = np.linspace(p.a, p.b, 33)
    val = quad_panels(
        lambda r: np.exp(-p.t**2 * (lam - r) ** 2), edges, order=order
    )
    return p.t / math.sqrt(math.pi) * val


def fourier_oracle(p, u):
    """(1/pi) int_0^inf H(lam) cos(lam u) d lam by panelized quadrature."""
    lam_max = p.b + 9.5 / p.t
    n_panels = max(32, int(8 * lam_max * (abs(u) + 1) / math.pi))
    edges = np.linspace(0.0, lam_max, n_panels + 1)
    val = quad_panels(lambda lam: even_window(p, lam) * np.cos(lam * u), edges, order=12)
    return val / math.pi


class TestSmoothedIndicator:
    def test_edge_value_from_convolution_oracle(self):
        p = WindowParams(0, 4, 1)  # t (b - a) = 4
        got = smoothed_indicator(p, 0.0)
        assert got == pytest.approx(0.5 * math.erf(4.0), abs=1e-15)
        assert got == pytest.approx(indicator_convolution_oracle(p, 0.0), abs=1e-12)

    def test_midpoint(self):
        p = WindowParams(0, 4, 1)
        mid = smoothed_indicator(p, 2.0)
        assert mid == pytest.approx(math.erf(2.0), abs=1e-14)
        assert mid == pytest.approx(indicator_convolution_oracle(p, 2.0), abs=1e-12)

    def test_sharp_limit_at_edge(self):
        vals = [smoothed_indicator(WindowParams(1, 2, t), 1.0) for t in (10, 100, 1000)]
        assert abs(vals[-1] - 0.5) < 1e-12
        assert abs(vals[0] - 0.5) < abs(vals[0] - 0.4)

    def test_range_on_dense_grid(self):
        lam = np.linspace(-30, 30, 100001)
        for p in CONFIGS:
            h = smoothed_indicator(p, lam)
            assert np.all(h >= 0.0) and np.all(h <= 1.0)

    def test_mass_equals_width(self):
        for p in CONFIGS:
            lam_max = p.b + 12.0 / p.t
            lam_min = p.a - 12.0 / p.t
            edges = np.linspace(lam_min, lam_max, 257)
            mass = quad_panels(lambda x: smoothed_indicator(p, x), edges, order=16)
            assert mass == pytest.approx(p.b - p.a, abs=1e-9)

    def test_oracle_agreement_on_grid(self):
        p = WindowParams(1, 3, 1.0)
        for lam in np.linspace(-1, 5, 23):
            assert smoothed_indicator(p, lam) == pytest.approx(
                indicator_convolution_oracle(p, lam), abs=1e-12
            )


class TestEvenWindow:
    def test_even_at_zero(self):
        p = WindowParams(0, 2, 1)
        assert even_window(p, 0.0) == pytest.approx(2 * smoothed_indicator(p, 0.0), abs=1e-15)

    def test_exact_evenness(self):
        p = WindowParams(1, 2, 3)
        lam = np.linspace(-8, 8, 1001)
        assert np.max(np.abs(even_window(p, lam) - even_window(p, -lam))) == 0.0

    def test_sum_structure(self):
        p = WindowParams(1, 2, 3)
        assert even_window(p, 1.5) == pytest.approx(
            smoothed_indicator(p, 1.5) + smoothed_indicator(p, -1.5), abs=1e-15
        )


class TestWindowTransform:
    def test_value_at_zero(self):
        for p in CONFIGS:
            assert window_transform(p, 0.0) == pytest.approx((p.b - p.a) / math.pi, abs=0)

    def test_unit_mass_window(self):
        p = WindowParams(0, math.pi, 1)
        assert window_transform(p, 0.0) == pytest.approx(1.0, rel=1e-15)

    def test_closed_form_example(self):
        p = WindowParams(1, 2, 1)
        expected = (math.sin(6) - math.sin(3)) / (3 * math.pi) * math.exp(-9 / 4)
        got = window_transform(p, 3.0)
        assert got == pytest.approx(expected, abs=1e-16)
        assert got == pytest.approx(fourier_oracle(p, 3.0), abs=1e-9)

    def test_against_fourier_oracle_grid(self):
        p = WindowParams(0, 2, 1)
        for u in np.linspace(-6, 6, 25):
            assert window_transform(p, float(u)) == pytest.approx(
                fourier_oracle(p, float(u)), abs=1e-9
            )

    def test_evenness(self):
        p = WindowParams(1, 3, 2)
        us = np.linspace(0.01, 15, 500)
        assert np.max(np.abs(window_transform(p, us) - window_transform(p, -us))) <= 1e-12

    def test_series_branch_continuity(self):
        p = WindowParams(1, 3, 2)
        assert window_transform(p, 9e-9) == pytest.approx(
            window_transform(p, 1.1e-8), rel=1e-9
        )


class TestWindowTransformDeriv:
    def test_zero_at_origin(self):
        p = WindowParams(1, 2, 1)
        assert window_transform_deriv(p, 0.0) == 0.0

    def test_finite_difference_grid(self):
        h = 1e-5
        for p in CONFIGS:
            for u in np.linspace(-8, 8, 33):
                fd = (window_transform(p, u + h) - window_transform(p, u - h)) / (2 * h)
                got = window_transform_deriv(p, float(u))
                assert got == pytest.approx(fd, abs=1e-7 * (1 + abs(fd)))

    def test_paper_style_bound_point(self):
        # |g'(2)| <= (1/pi + 8/(2 pi)) e^{-1} at t = 1, b = 2
        p = WindowParams(0, 2, 1)
        bound = (1 / math.pi + 8 / (2 * math.pi)) * math.exp(-1.0)
        assert abs(window_transform_deriv(p, 2.0)) <= bound


class TestTailEnvelope:
    def test_value(self):
        assert tail_envelope(1.0) == pytest.approx(
            math.exp(-1) / (2 * math.sqrt(math.pi)), rel=1e-15
        )

    def test_monotone(self):
        rho = np.linspace(0.05, 6, 400)
        vals = tail_envelope(rho)
        assert np.all(np.diff(vals) < 0)

    def test_vanishes_at_infinity(self):
        assert tail_envelope(30.0) < 1e-300 or tail_envelope(30.0) < 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            tail_envelope(0.0)


class TestDecayBounds:
    """The transform bounds and the indicator envelope on the documented grids."""

    T_GRID = (0.5, 1.0, 2.0)
    WINDOWS = ((0, 1), (1, 3), (0, 10))

    def test_transform_bound(self):
        us = np.linspace(0.02, 20, 500)
        for t in self.T_GRID:
            for a, b in self.WINDOWS:
                p = WindowParams(a, b, t)
                lhs = np.abs(window_transform(p, us))
                rhs = 2.0 / (math.pi * us) * np.exp(-(us**2) / (4 * t * t))
                assert np.all(lhs <= rhs * (1 + 1e-12))

    def test_transform_deriv_bound(self):
        us = np.linspace(0.02, 20, 500)
        for t in self.T_GRID:
            for a, b in self.WINDOWS:
                p = WindowParams(a, b, t)
                lhs = np.abs(window_transform_deriv(p, us))
                rhs = (1.0 / (math.pi * t * t) + 4.0 * b / (math.pi * us)) * np.exp(
                    -(us**2) / (4 * t * t)
                )
                assert np.all(lhs <= rhs * (1 + 1e-12))

    def test_indicator_envelope_three_regimes(self):
        for t in (0.5, 1.0, 2.0, 4.0):
            for a, b in self.WINDOWS:
                p = WindowParams(a, b, t)
                for lam in a - np.linspace(0.03, 4, 40) / t:
                    err = abs(smoothed_indicator(p, lam) - sharp_indicator(p, lam))
                    assert err <= tail_envelope(t * abs(lam - a)) * (1 + 1e-12)
                for lam in b + np.linspace(0.03, 4, 40) / t:
                    err = abs(smoothed_indicator(p, lam) - sharp_indicator(p, lam))
                    assert err <= tail_envelope(t * abs(lam - b)) * (1 + 1e-12)
                inner = a + (b - a) * np.linspace(0.017, 0.983, 40)
                for lam in inner:
                    err = abs(smoothed_indicator(p, lam) - sharp_indicator(p, lam))
                    bound = tail_envelope(t * abs(lam - a)) + tail_envelope(t * abs(lam - b))
                    assert err <= bound * (1 + 1e-12)


def test_window_validation():
    with pytest.raises(DomainError):
        WindowParams(2, 1, 1)
    with pytest.raises(DomainError):
        WindowParams(-1, 1, 1)
    with pytest.raises(DomainError):
        WindowParams(0, 1, 0)
