"""The Gaussian-smoothed spectral window family and its transform.

A window (a, b) with smoothing parameter t defines

* ``smoothed_indicator`` -- the indicator of [a, b] convolved with a
  Gaussian of inverse width t, evaluated through its error-function
  closed form,
* ``even_window`` -- its symmetrization about 0,
* ``window_transform`` -- the inverse Fourier transform of the even
  window, with the closed form (sin(bu) - sin(au))/(pi u) * exp(-u^2/4t^2),
* ``window_transform_deriv`` -- its analytic derivative,
* ``tail_envelope`` -- the non-increasing envelope exp(-r^2)/(2 sqrt(pi) r)
  controlling how fast the smoothed indicator approaches the sharp one.

The closed forms replace numerical convolution; the quadrature routes are
kept in the test suite as oracles.  All evaluators accept scalars or
numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import DomainError

__all__ = [
    "WindowParams",
    "smoothed_indicator",
    "even_window",
    "window_transform",
    "window_transform_deriv",
    "tail_envelope",
    "sharp_indicator",
]

_SERIES_CUT = 1e-8


@dataclass(frozen=True)
class WindowParams:
    """Spectral window endpoints 0 <= a <= b and smoothing parameter t > 0."""

    a: float
    b: float
    t: float

    def __post_init__(self):
        if not (0.0 <= self.a <= self.b):
            raise DomainError(f"window requires 0 <= a <= b, got ({self.a}, {self.b})")
        if not (self.t > 0.0):
            raise DomainError(f"window requires t > 0, got {self.t}")

    @property
    def width(self) -> float:
        return self.b - self.a


def smoothed_indicator(p: WindowParams, lam):
    """(1_[a,b] * Gaussian_t)(lam) = (erf(t(lam-a)) - erf(t(lam-b)))/2, in [0, 1].

    The exact value lies in [0, 1]; the erf difference can overshoot by an
    ulp, so the result is clipped.
    """
    lam = np.asarray(lam, dtype=float)
    out = np.clip(0.5 * (erf(p.t * (lam - p.a)) - erf(p.t * (lam - p.b))), 0.0, 1.0)
    return out if out.ndim else float(out)


def even_window(p: WindowParams, lam):
    """Symmetrized window h(lam) + h(-lam); even exactly by construction."""
    lam = np.asarray(lam, dtype=float)
    out = smoothed_indicator(p, lam) + smoothed_indicator(p, -lam)
    return out if np.ndim(out) else float(out)


def _sin_diff_over_u(a: float, b: float, u: np.ndarray) -> np.ndarray:
    """(sin(bu) - sin(au))/u with a 4th-order series below the cut."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _SERIES_CUT
    safe = np.where(small, 1.0, u)
    direct = (np.sin(b * safe) - np.sin(a * safe)) / safe
    u2 = u * u
    series = (b - a) - (b**3 - a**3) / 6.0 * u2 + (b**5 - a**5) / 120.0 * u2 * u2
    return np.where(small, series, direct)


def window_transform(p: WindowParams, u):
    """Inverse Fourier transform of the even window.

    Closed form (sin(bu) - sin(au)) / (pi u) * exp(-u^2 / 4 t^2); the
    removable singularity at u = 0 is handled by a short Taylor series
    below |u| = 1e-8 and takes the exact value (b - a)/pi at u = 0.
    """
    u = np.asarray(u, dtype=float)
    out = _sin_diff_over_u(p.a, p.b, u) / math.pi * np.exp(-(u * u) / (4.0 * p.t * p.t))
    return out if out.ndim else float(out)


def window_transform_deriv(p: WindowParams, u):
    """Analytic derivative of ``window_transform``; odd, vanishes at 0."""
    u = np.asarray(u, dtype=float)
    a, b, t = p.a, p.b, p.t
    gauss = np.exp(-(u * u) / (4.0 * t * t))
    small = np.abs(u) < _SERIES_CUT
    safe = np.where(small, 1.0, u)
    core = (np.cos(b * safe) * b - np.cos(a * safe) * a) / safe - (
        np.sin(b * safe) - np.sin(a * safe)
    ) / (safe * safe)
    # d/du[(sin bu - sin au)/u] is odd with series -(b^3-a^3)u/3 + (b^5-a^5)u^3/30
    series = -(b**3 - a**3) / 3.0 * u + (b**5 - a**5) / 30.0 * u**3
    core = np.where(small, series, core)
    sdo = _sin_diff_over_u(a, b, u)
    out = (core - sdo * u / (2.0 * t * t)) * gauss / math.pi
    return out if out.ndim else float(out)


def tail_envelope(rho):
    """exp(-rho^2) / (2 sqrt(pi) rho) for rho > 0; non-increasing."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr <= 0.0):
        raise DomainError("tail envelope requires rho > 0")
    out = np.exp(-rho_arr * rho_arr) / (2.0 * math.sqrt(math.pi) * rho_arr)
    return out if out.ndim else float(out)


def sharp_indicator(p: WindowParams, lam):
    """Sharp limit of the smoothed indicator: 1 on (a,b), 1/2 at a and b, else 0."""
    lam = np.asarray(lam, dtype=float)
    out = np.where(
        (lam > p.a) & (lam < p.b),
        1.0,
        np.where((lam == p.a) | (lam == p.b), 0.5, 0.0),
    )
    return out if out.ndim else float(out)
