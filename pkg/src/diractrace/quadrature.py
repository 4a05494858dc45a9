"""Quadrature backends used throughout the package.

Two independent schemes are provided:

* ``quad_adaptive`` -- adaptive bisection with an embedded Gauss-Legendre
  pair (7/15 nodes) for the error estimate;
* ``quad_tanhsinh`` -- fixed tanh-sinh (double exponential) rule with
  level refinement.

``quad_checked`` evaluates both and raises :class:`NumericError` when they
disagree by more than ten times the requested tolerance, which is the
cross-validation contract used by the transform operators and their tests.

All integrands must accept numpy arrays (they are called on node vectors).
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import NumericError

__all__ = [
    "gauss_legendre",
    "quad_adaptive",
    "quad_tanhsinh",
    "quad_checked",
    "quad_panels",
]

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    rule = _GL_CACHE.get(n)
    if rule is None:
        x, w = np.polynomial.legendre.leggauss(n)
        rule = (x, w)
        _GL_CACHE[n] = rule
    return rule


def _gl_pair(f, a: float, b: float) -> tuple[float, float]:
    """Return (I15, |I15 - I7|) on one panel."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x7, w7 = gauss_legendre(7)
    x15, w15 = gauss_legendre(15)
    f7 = f(mid + half * x7)
    f15 = f(mid + half * x15)
    i7 = half * float(np.dot(w7, f7))
    i15 = half * float(np.dot(w15, f15))
    return i15, abs(i15 - i7)


def quad_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-16,
    max_panels: int = 4000,
) -> float:
    """Adaptive Gauss-Legendre integration of ``f`` over [a, b].

    The panel with the largest error estimate is bisected until the summed
    estimate drops below ``rel_tol`` relative to the accumulated integral
    or below ``abs_tol`` absolutely (the latter stops futile refinement of
    integrals that vanish to rounding).  Raises :class:`NumericError` if
    the panel budget is exhausted first.
    """
    if a == b:
        return 0.0
    if b < a:
        return -quad_adaptive(f, b, a, rel_tol, abs_tol, max_panels)
    val, err = _gl_pair(f, a, b)
    panels = [(err, a, b, val)]
    total_val = val
    total_err = err
    while True:
        if total_err <= max(rel_tol * abs(total_val), abs_tol):
            return total_val
        if len(panels) >= max_panels:
            raise NumericError(
                f"adaptive quadrature did not converge on [{a}, {b}]: "
                f"err={total_err:.3e}, value={total_val:.3e}, panels={len(panels)}"
            )
        # split the worst panel
        idx = max(range(len(panels)), key=lambda i: panels[i][0])
        perr, pa, pb, pval = panels.pop(idx)
        pm = 0.5 * (pa + pb)
        v1, e1 = _gl_pair(f, pa, pm)
        v2, e2 = _gl_pair(f, pm, pb)
        total_val += v1 + v2 - pval
        total_err += e1 + e2 - perr
        panels.append((e1, pa, pm, v1))
        panels.append((e2, pm, pb, v2))


def quad_tanhsinh(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rel_tol: float = 1e-12,
    max_level: int = 12,
) -> float:
    """Tanh-sinh quadrature of ``f`` over the finite interval [a, b].

    The trapezoid rule in the transformed variable is refined by halving
    the mesh until two consecutive levels agree to ``rel_tol``.
    """
    if a == b:
        return 0.0
    if b < a:
        return -quad_tanhsinh(f, b, a, rel_tol, max_level)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    u_max = 3.8  # tanh((pi/2) sinh 3.8) is 1 at double precision

    def level_sum(us: np.ndarray) -> float:
        s = (0.5 * math.pi) * np.sinh(us)
        w = (0.5 * math.pi) * np.cosh(us) / np.cosh(s) ** 2
        # assemble points from their offset to the nearer endpoint, so
        # nodes double-exponentially close to a or b keep full precision
        # (integrable endpoint singularities then behave)
        em = np.exp(-2.0 * np.abs(s))
        offset = half * 2.0 * em / (1.0 + em)
        pts = np.where(us >= 0.0, b - offset, a + offset)
        keep = offset > 0.0
        return float(np.dot(w[keep], f(pts[keep])))

    h = 1.0
    grid = np.arange(-math.floor(u_max / h), math.floor(u_max / h) + 1) * h
    total = level_sum(grid) * h
    prev = math.inf
    for _ in range(max_level):
        h *= 0.5
        odd = np.arange(-math.floor(u_max / h), math.floor(u_max / h) + 1) * h
        odd = odd[np.abs(np.round(odd / (2 * h)) * 2 * h - odd) > 0.25 * h]
        total = 0.5 * total + level_sum(odd) * h
        cur = total * half
        if math.isfinite(prev) and abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    if abs(total * half - prev) <= 1e3 * rel_tol * max(abs(prev), 1e-300):
        return total * half
    raise NumericError(f"tanh-sinh quadrature did not converge on [{a}, {b}]")


def quad_checked(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_floor: float = 1e-14,
    abs_tol: float = 1e-16,
) -> float:
    """Integrate with both schemes; fail when they disagree by > 10x target."""
    v1 = quad_adaptive(f, a, b, rel_tol=rel_tol, abs_tol=abs_tol)
    v2 = quad_tanhsinh(f, a, b, rel_tol=min(rel_tol, 1e-12))
    scale = max(abs(v1), abs(v2), abs_floor)
    if abs(v1 - v2) > 10.0 * rel_tol * scale:
        raise NumericError(
            f"quadrature schemes disagree on [{a}, {b}]: "
            f"adaptive={v1!r}, tanhsinh={v2!r}"
        )
    return v1


def quad_panels(
    f: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    order: int = 20,
) -> float:
    """Fixed composite Gauss-Legendre rule over consecutive ``edges``."""
    x, w = gauss_legendre(order)
    edges = np.asarray(edges, dtype=float)
    los = edges[:-1]
    his = edges[1:]
    mids = 0.5 * (los + his)
    halves = 0.5 * (his - los)
    pts = mids[:, None] + halves[:, None] * x[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    return float(np.sum(halves * (vals @ w)))
