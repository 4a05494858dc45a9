"""Grid verification sweeps for every inequality the package relies on.

Each family generates rows (check_id, params, lhs, rhs, margin, passed)
over documented parameter grids with at least 1000 configurations, where
margin = rhs - lhs must be non-negative.  Families:

* ``lemma2_transform`` / ``lemma2_transform_deriv`` -- decay bounds on the
  window transform and its derivative;
* ``lemma2_indicator`` -- the envelope controlling smoothed-vs-sharp
  indicator error in its three regimes;
* ``prop6`` -- integral term vs main term;
* ``prop7`` -- cusp term bound;
* ``prop10`` -- kernel envelope against quadrature kernel values;
* ``lemma11`` -- measured ball counts against the counting bound on the
  model groups;
* ``lemma12`` / ``lemma13`` -- the thick/thin envelope inequality chains
  in scalar form (the full trace-level comparison runs once in the
  acceptance suite; see the ledger note on the shell-start convention).

``inject_scale`` multiplies every right-hand side; it exists as a test
hook so the CLI's failure exit path can be exercised deliberately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .groups import GroupPresentation, counting_bound, enumerate_ball, systole_estimate
from .halfplane import HPoint
from .traceterms import (
    integral_term,
    main_term,
    prop6_envelope,
    prop7_envelope,
    prop10_envelope,
)
from .transforms import window_kernel
from .windows import (
    WindowParams,
    sharp_indicator,
    smoothed_indicator,
    tail_envelope,
    window_transform,
    window_transform_deriv,
)

__all__ = ["CheckRow", "FAMILIES", "run_checks", "rows_to_csv_payload"]


@dataclass
class CheckRow:
    check_id: str
    params: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= 0.0


_T_GRID = (0.5, 1.0, 2.0)
_WINDOWS = ((0.0, 1.0), (1.0, 3.0), (0.0, 10.0))


def _family_lemma2_transform() -> list[CheckRow]:
    rows = []
    us = np.concatenate([np.linspace(0.01, 2.0, 120), np.linspace(2.05, 20.0, 80)])
    for t in _T_GRID:
        for a, b in _WINDOWS:
            p = WindowParams(a, b, t)
            g = np.abs(window_transform(p, us))
            env = 2.0 / (math.pi * us) * np.exp(-(us * us) / (4.0 * t * t))
            for u, lhs, rhs in zip(us, g, env):
                rows.append(
                    CheckRow("lemma2_transform", f"a={a};b={b};t={t};u={u:.6g}",
                             float(lhs), float(rhs))
                )
    return rows


def _family_lemma2_transform_deriv() -> list[CheckRow]:
    rows = []
    us = np.concatenate([np.linspace(0.01, 2.0, 120), np.linspace(2.05, 20.0, 80)])
    for t in _T_GRID:
        for a, b in _WINDOWS:
            p = WindowParams(a, b, t)
            gp = np.abs(window_transform_deriv(p, us))
            env = (1.0 / (math.pi * t * t) + 4.0 * b / (math.pi * us)) * np.exp(
                -(us * us) / (4.0 * t * t)
            )
            for u, lhs, rhs in zip(us, gp, env):
                rows.append(
                    CheckRow("lemma2_transform_deriv",
                             f"a={a};b={b};t={t};u={u:.6g}", float(lhs), float(rhs))
                )
    return rows


def _family_lemma2_indicator() -> list[CheckRow]:
    rows = []
    t_grid = (0.5, 1.0, 2.0, 4.0)
    windows = ((0.0, 1.0), (1.0, 3.0), (0.0, 10.0), (2.0, 2.5))
    for t in t_grid:
        for a, b in windows:
            p = WindowParams(a, b, t)
            lam_below = a - np.linspace(0.05, 5.0, 25) / t
            lam_above = b + np.linspace(0.05, 5.0, 25) / t
            lam_inside = a + (b - a) * np.linspace(0.013, 0.987, 25)
            for lam in lam_below:
                lhs = abs(smoothed_indicator(p, lam) - sharp_indicator(p, lam))
                rhs = tail_envelope(t * abs(lam - a))
                rows.append(CheckRow("lemma2_indicator",
                                     f"a={a};b={b};t={t};lam={lam:.6g};regime=below",
                                     lhs, rhs))
            for lam in lam_inside:
                lhs = abs(smoothed_indicator(p, lam) - sharp_indicator(p, lam))
                rhs = tail_envelope(t * abs(lam - a)) + tail_envelope(t * abs(lam - b))
                rows.append(CheckRow("lemma2_indicator",
                                     f"a={a};b={b};t={t};lam={lam:.6g};regime=inside",
                                     lhs, rhs))
            for lam in lam_above:
                lhs = abs(smoothed_indicator(p, lam) - sharp_indicator(p, lam))
                rhs = tail_envelope(t * abs(lam - b))
                rows.append(CheckRow("lemma2_indicator",
                                     f"a={a};b={b};t={t};lam={lam:.6g};regime=above",
                                     lhs, rhs))
            # boundary rows: at lam = a the bound uses the far edge, and
            # symmetrically at lam = b
            if b > a:
                lhs = abs(smoothed_indicator(p, a) - 0.5)
                rows.append(CheckRow("lemma2_indicator",
                                     f"a={a};b={b};t={t};lam=a;regime=edge",
                                     lhs, tail_envelope(t * (b - a))))
                lhs = abs(smoothed_indicator(p, b) - 0.5)
                rows.append(CheckRow("lemma2_indicator",
                                     f"a={a};b={b};t={t};lam=b;regime=edge",
                                     lhs, tail_envelope(t * (b - a))))
    return rows


def _family_prop6() -> list[CheckRow]:
    rows = []
    t_grid = np.concatenate([np.linspace(0.4, 2.0, 17), np.linspace(2.25, 4.0, 8)])
    windows = [(0.0, 1.0), (1.0, 3.0), (0.0, 10.0), (0.5, 0.5), (2.0, 2.0)]
    windows += [(0.1 * i, 0.1 * i + 0.3 * j) for i in range(1, 8) for j in range(1, 6)]
    for t in t_grid:
        for a, b in windows:
            p = WindowParams(a, b, float(t))
            lhs = abs(integral_term(p) - main_term(a, b))
            rows.append(CheckRow("prop6", f"a={a:.3g};b={b:.3g};t={t:.4g}",
                                 lhs, prop6_envelope(p)))
    return rows


def _family_prop7() -> list[CheckRow]:
    rows = []
    signatures = [(0, 3), (0, 4), (0, 5), (1, 1), (1, 2), (2, 0), (2, 1),
                  (3, 2), (4, 0), (5, 4)]
    windows = [(0.0, 1.0), (0.0, 2.0), (1.0, 3.0), (0.0, 10.0), (2.0, 2.0),
               (0.5, 4.5), (1.5, 2.0), (3.0, 8.0), (0.0, 0.5), (0.25, 1.25)]
    for g, k in signatures:
        for a, b in windows:
            for t in _T_GRID:
                p = WindowParams(a, b, t)
                area = 2.0 * math.pi * (2 * g - 2 + k)
                cusp = -k * math.log(2.0) / (2.0 * area) * (b - a) / math.pi
                rows.append(CheckRow("prop7", f"g={g};k={k};a={a};b={b};t={t}",
                                     abs(cusp), prop7_envelope(g, k, p)))
    return rows


def _family_prop10() -> list[CheckRow]:
    rows = []
    rho_grid = np.linspace(0.25, 12.0, 170)
    for t in _T_GRID:
        for a, b in ((0.0, 1.0), (1.0, 3.0)):
            p = WindowParams(a, b, t)
            for rho in rho_grid:
                lhs = abs(window_kernel(p, float(rho)))
                rows.append(CheckRow("prop10", f"a={a};b={b};t={t};rho={rho:.5g}",
                                     lhs, prop10_envelope(p, float(rho))))
    return rows


def _family_lemma11() -> list[CheckRow]:
    rows = []
    j_grid = np.arange(0.5, 8.01, 0.5)
    # cyclic models: complete enumeration, counts are 2 floor(j / ell)
    for ell in np.linspace(0.4, 2.2, 19):
        group = GroupPresentation.cyclic(float(ell))
        r = min(2.0, float(ell) / 2.0)
        z0 = HPoint(0.0, 1.0)
        ball = enumerate_ball(group, z0, float(j_grid[-1]),
                              group.complete_word_length(float(j_grid[-1])))
        disps = sorted(e.displacement for e in ball if e.klass == "hyperbolic")
        for j in j_grid:
            count = sum(1 for d in disps if d <= j + 1e-12)
            rows.append(CheckRow("lemma11", f"model=cyclic;ell={ell:.4g};j={j}",
                                 float(count), counting_bound(float(j), r)))
    # gamma2: frontier enumeration with validated slack
    group = GroupPresentation.gamma2()
    systole = systole_estimate(group, 8)
    r = min(2.0, systole / 2.0)
    basepoints = [HPoint(x, y) for x in (0.0, 0.35, -0.6) for y in (0.7, 1.0, 1.9, 3.0)]
    for z0 in basepoints:
        ball = enumerate_ball(group, z0, 8.0, 64, frontier_slack=2.5)
        disps = sorted(e.displacement for e in ball if e.klass == "hyperbolic")
        for j in j_grid:
            count = sum(1 for d in disps if d <= j + 1e-12)
            rows.append(
                CheckRow("lemma11",
                         f"model=gamma2;z0={z0.x:.3g}+{z0.y:.3g}i;j={j}",
                         float(count), counting_bound(float(j), r))
            )
    return rows


def _gauss_shell_sum(t: float, j_start: int, terms: int = 600) -> float:
    j = np.arange(j_start, j_start + terms, dtype=float)
    expo = j - j * j / (4.0 * t * t)
    return float(np.sum(np.where(expo < -700.0, 0.0, np.exp(np.minimum(expo, 700.0)))))


def _family_lemma12() -> list[CheckRow]:
    rows = []
    t_grid = np.linspace(0.3, 3.0, 32)
    mult_grid = np.linspace(1.0, 3.0, 32)
    for t in t_grid:
        for c in mult_grid:
            L = c * 8.0 * t * t
            lhs_a = (1.0 + 4.0 * t * t / L) * math.exp(-L * L / (8.0 * t * t))
            rhs = 2.0 * math.exp(-L)
            rows.append(CheckRow("lemma12",
                                 f"t={t:.4g};L={L:.4g};step=gaussian-integral",
                                 lhs_a, rhs))
            lhs_b = _gauss_shell_sum(float(t), int(math.floor(2.0 * L)))
            rows.append(CheckRow("lemma12",
                                 f"t={t:.4g};L={L:.4g};step=shell-sum-2L",
                                 lhs_b, rhs))
    return rows


def _family_lemma13() -> list[CheckRow]:
    rows = []
    t_grid = np.linspace(0.3, 3.0, 32)
    mult_grid = np.linspace(1.0, 3.0, 32)
    for t in t_grid:
        for c in mult_grid:
            L = c * 8.0 * t * t
            lhs = _gauss_shell_sum(float(t), 0)
            rhs = 2.0 * (1.0 + L * math.exp(L))
            rows.append(CheckRow("lemma13", f"t={t:.4g};L={L:.4g}", lhs, rhs))
    return rows


FAMILIES: dict[str, Callable[[], list[CheckRow]]] = {
    "lemma2_transform": _family_lemma2_transform,
    "lemma2_transform_deriv": _family_lemma2_transform_deriv,
    "lemma2_indicator": _family_lemma2_indicator,
    "prop6": _family_prop6,
    "prop7": _family_prop7,
    "prop10": _family_prop10,
    "lemma11": _family_lemma11,
    "lemma12": _family_lemma12,
    "lemma13": _family_lemma13,
}


def run_checks(
    families: Optional[Iterable[str]] = None,
    inject_scale: float = 1.0,
) -> list[CheckRow]:
    """Run the selected families (all by default) in a fixed order.

    ``inject_scale`` multiplies every right-hand side (test hook for the
    failure exit path; 1.0 leaves the checks untouched).
    """
    names = list(FAMILIES) if families is None else list(families)
    unknown = [n for n in names if n not in FAMILIES]
    if unknown:
        from .errors import ValidationError

        raise ValidationError(f"unknown check families: {unknown}")
    rows: list[CheckRow] = []
    for name in names:
        produced = FAMILIES[name]()
        if inject_scale != 1.0:
            produced = [
                CheckRow(r.check_id, r.params, r.lhs, r.rhs * inject_scale)
                for r in produced
            ]
        rows.extend(produced)
    return rows


def rows_to_csv_payload(rows: list[CheckRow]) -> tuple[list[str], list[list]]:
    header = ["check_id", "params", "lhs", "rhs", "margin", "pass"]
    data = [[r.check_id, r.params, r.lhs, r.rhs, r.margin, r.passed] for r in rows]
    return header, data
