"""The three geometric-side terms of the pretrace identity, the bound
envelopes, parameter schedules, and the derived asymptotic evaluators.

For a surface model (group, nontrivial spin structure, signature) and a
spectral window, the smoothed counting density decomposes as

    density = I + C + Re R_K

where I is the integral term (1/8 pi) int H(lam) lam coth(pi lam) d lam,
C the cusp term -k log(2) g(0) / (2 area), and R_K the group-sum term

    R_K = 1/(2 area) sum_{gamma hyperbolic} int_F eps(gamma)
          K(d(z, gamma z)) tau_{z -> gamma^{-1} z} dz,

split into thin and thick contributions R_minus and R_plus by the local
injectivity radius against the threshold L.  The kernel argument pairs
gamma with the transport of gamma^{-1} exactly as the identity is
stated; since displacement and character are inversion-invariant this is
the same sum reindexed.

The group sum is evaluated on a mirror-symmetric quadrature grid, which
makes the imaginary part cancel structurally (the integrand conjugates
under x -> -x); the residual imaginary part is a roundoff-level
diagnostic.  Truncation radii follow the envelope-times-counting rule
(tail below 1e-10 of the accumulated value) and are capped at the radius
beyond which the same bound certifies that additions cannot move the
result at double precision; the cap is what keeps "double the truncation
radius" probes affordable, and is recorded in the diagnostics.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DomainError, NumericError, ValidationError
from .groups import (
    DomainGrid,
    GroupPresentation,
    _run_ball_search,
    build_domain_grid,
    cosh_displacements,
    cosh_displacements_rows,
    counting_bound,
    displacement_form,
    systole_estimate,
)
from .halfplane import HPoint, area_of_signature
from .quadrature import quad_adaptive
from .spin import SpinAssignment, cusp_report
from .transforms import WindowKernelTable
from .windows import WindowParams, even_window

__all__ = [
    "SurfaceModel",
    "TraceSettings",
    "TraceReport",
    "main_term",
    "integral_term",
    "cusp_term",
    "geometric_term",
    "smoothed_density",
    "stability_probes",
    "parameter_schedule",
    "smoothing_edge_offset",
    "remainder_window",
    "counting_upper_bound",
    "weyl_leading",
    "multiplicity_bound",
    "pinched_low_eigenvalue_count",
    "in_good_set",
    "prop6_envelope",
    "prop7_envelope",
    "prop10_envelope",
    "lemma12_envelope",
    "lemma13_envelope",
    "truncation_tail_bound",
]

IM_RESIDUE_REL = 1e-6
IM_RESIDUE_ABS = 1e-9


# ---------------------------------------------------------------------------
# scalar terms
# ---------------------------------------------------------------------------


def _lam_coth(lam: np.ndarray) -> np.ndarray:
    """lam * coth(pi lam), extended by continuity with value 1/pi at 0."""
    lam = np.asarray(lam, dtype=float)
    small = np.abs(lam) < 1e-4
    safe = np.where(small, 1.0, lam)
    series = 1.0 / math.pi + math.pi * lam * lam / 3.0
    return np.where(small, series, safe / np.tanh(math.pi * safe))


def main_term(a: float, b: float) -> float:
    """(1/4 pi) int_a^b lam coth(pi lam) d lam; the limiting density mass."""
    if a > b:
        raise DomainError(f"main term requires a <= b, got ({a}, {b})")
    if a == b:
        return 0.0
    return quad_adaptive(_lam_coth, a, b, rel_tol=1e-10) / (4.0 * math.pi)


def integral_term(p: WindowParams, rel_tol: float = 1e-9) -> float:
    """Integral term of the identity for the Gaussian window family.

    Evenness halves the range; the Gaussian tail of the window is cut
    where it falls below 1e-20.
    """
    lam_max = p.b + math.sqrt(math.log(1e20)) / p.t

    def integrand(lam):
        return even_window(p, lam) * _lam_coth(lam)

    val = quad_adaptive(integrand, 0.0, lam_max, rel_tol=rel_tol)
    return val / (4.0 * math.pi)


def cusp_term(model: "SurfaceModel", p: WindowParams) -> float:
    """Exact cusp term -(k log 2 / (2 area)) * (b - a)/pi."""
    k = model.cusps
    if k == 0:
        return 0.0
    g0 = (p.b - p.a) / math.pi
    return -k * math.log(2.0) / (2.0 * model.area) * g0


# ---------------------------------------------------------------------------
# envelopes from the bound suite
# ---------------------------------------------------------------------------


def prop6_envelope(p: WindowParams) -> float:
    """|integral term - main term| <= (b+1)/(2t) + 1/(2t^2)."""
    return (p.b + 1.0) / (2.0 * p.t) + 1.0 / (2.0 * p.t * p.t)


def prop7_envelope(g: int, k: int, p: WindowParams) -> float:
    """|cusp term| <= k (b - a) / (2g - 2 + k)."""
    chi = 2 * g - 2 + k
    if chi <= 0:
        raise DomainError(f"signature ({g}, {k}) is not hyperbolic")
    return k * (p.b - p.a) / chi


def prop10_envelope(p: WindowParams, rho) -> float:
    """|K(rho)| <= (1/t^2 + (b+1)/rho)(1 + t/rho) exp(-rho^2 / 4 t^2)."""
    rho = np.asarray(rho, dtype=float)
    t, b = p.t, p.b
    out = (1.0 / (t * t) + (b + 1.0) / rho) * (1.0 + t / rho) * np.exp(
        -rho * rho / (4.0 * t * t)
    )
    return out if out.ndim else float(out)


def _lemma1213_prefactor(p: WindowParams, r: float) -> float:
    if not (0.0 < r <= 2.0):
        raise DomainError(f"envelope requires 0 < r <= 2, got r={r}")
    t, b = p.t, p.b
    return (4.0 * math.e / (r * r)) * (1.0 / (t * t) + (b + 1.0) / r) * (1.0 + t / r)


def lemma12_envelope(p: WindowParams, r: float, L: float) -> float:
    """Thick-part bound (4e/r^2)(1/t^2 + (b+1)/r)(1 + t/r) e^{-L}; valid
    when L >= 8 t^2 and the systole exceeds 2r."""
    if L < 8.0 * p.t * p.t:
        raise DomainError(f"thick-part envelope needs L >= 8 t^2 = {8 * p.t * p.t}")
    return _lemma1213_prefactor(p, r) * math.exp(-L)


def lemma13_envelope(p: WindowParams, r: float, L: float, thin_fraction: float) -> float:
    """Thin-part bound: same prefactor times (thin area fraction)(1 + L e^L)."""
    if thin_fraction < 0.0:
        raise DomainError("thin fraction must be >= 0")
    return _lemma1213_prefactor(p, r) * thin_fraction * (1.0 + L * math.exp(L))


def truncation_tail_bound(
    p: WindowParams, r: float, area_ratio: float, radius: float, shells: int = 400
) -> float:
    """Upper bound on the density contribution of elements beyond ``radius``.

    Sums the counting bound 4 e^{1+(j+1)}/r^2 per unit shell against the
    kernel envelope, times area_ratio / 2 for the integral and the
    1/(2 area) prefactor.  Exponents are combined in log space so deep
    tails underflow to zero instead of overflowing.
    """
    t, b = p.t, p.b
    j = np.arange(math.floor(radius), math.floor(radius) + shells, dtype=float)
    jsafe = np.maximum(j, 1e-3)
    expo = 2.0 + j - j * j / (4.0 * t * t)
    poly = (4.0 / (r * r)) * (1.0 / (t * t) + (b + 1.0) / jsafe) * (1.0 + t / jsafe)
    terms = np.where(expo < -700.0, 0.0, np.exp(np.minimum(expo, 700.0)) * poly)
    return 0.5 * area_ratio * float(np.sum(terms))


def _solve_truncation_radius(
    p: WindowParams, r: float, area_ratio: float, target: float
) -> float:
    radius = max(2.0 * p.t, 1.0)
    while radius < 400.0:
        if truncation_tail_bound(p, r, area_ratio, radius) <= target:
            return radius
        radius += 0.25
    raise NumericError("could not satisfy the truncation tail target")


# ---------------------------------------------------------------------------
# surface models and trace settings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceSettings:
    """Numeric knobs of the group-sum evaluation."""

    resolution: int = 40
    cusp_cutoff: float = 12.0
    word_cap: int = 4000
    budget: int = 200_000_000
    r_trunc: Optional[float] = None     # None -> envelope/counting rule
    r_split: float = 10.0               # near/far band split of the group sum
    slack: float = 1.0                  # search-radius slack of the word BFS
    accum_hint: Optional[float] = None  # None -> cheap pre-pass estimate
    tail_rel_target: float = 1e-10      # the documented truncation rule
    cap_rel: float = 1e-13              # noise-floor cap (see module docstring)
    prepass_radius: float = 9.0         # truncation radius of the hint pre-pass
    angle_cos: float = 0.99             # cyclic demo funnel cutoff
    systole_word_len: int = 8
    threads: Optional[int] = None


@dataclass(frozen=True)
class SurfaceModel:
    """A model surface: group, spin assignment, signature and base point.

    The area is the signature area 2 pi (2g - 2 + k).  The cyclic model
    is a demo mode (a hyperbolic cylinder, not a finite-area surface);
    its declared signature only normalizes the trace-term prefactor.
    """

    group: GroupPresentation
    spin: SpinAssignment
    genus: int
    cusps: int
    basepoint: HPoint = field(default_factory=lambda: HPoint(0.0, 1.0))
    settings: TraceSettings = field(default_factory=TraceSettings)

    def __post_init__(self):
        if len(self.spin.signs) != self.group.rank:
            raise ValidationError("spin assignment rank mismatch")
        area_of_signature(self.genus, self.cusps)  # validates

    @property
    def area(self) -> float:
        return area_of_signature(self.genus, self.cusps)

    @classmethod
    def gamma2_reference(
        cls,
        spin: SpinAssignment | tuple[int, int] = (-1, -1),
        settings: Optional[TraceSettings] = None,
    ) -> "SurfaceModel":
        if not isinstance(spin, SpinAssignment):
            spin = SpinAssignment(tuple(spin))
        return cls(
            group=GroupPresentation.gamma2(),
            spin=spin,
            genus=0,
            cusps=3,
            basepoint=HPoint(0.0, 1.0),
            settings=settings or TraceSettings(),
        )

    @classmethod
    def cyclic_demo(
        cls,
        ell: float,
        spin_sign: int = -1,
        settings: Optional[TraceSettings] = None,
    ) -> "SurfaceModel":
        return cls(
            group=GroupPresentation.cyclic(ell),
            spin=SpinAssignment((spin_sign,)),
            genus=2,
            cusps=0,
            basepoint=HPoint(0.0, 1.0),
            settings=settings or TraceSettings(),
        )


@dataclass
class GeometricTermResult:
    r_plus: complex
    r_minus: complex
    diagnostics: dict

    @property
    def r_k(self) -> complex:
        return self.r_plus + self.r_minus


@dataclass
class TraceReport:
    """Evaluated terms, envelopes and diagnostics of one configuration."""

    window: dict
    model: dict
    integral: float
    cusp: float
    r_plus_re: float
    r_plus_im: float
    r_minus_re: float
    r_minus_im: float
    density: float
    envelopes: dict
    diagnostics: dict

    @property
    def r_k(self) -> complex:
        return complex(
            self.r_plus_re + self.r_minus_re, self.r_plus_im + self.r_minus_im
        )

    def to_json_dict(self) -> dict:
        return {
            "schema": "trace_report.v1",
            "window": self.window,
            "model": self.model,
            "terms": {
                "integral": self.integral,
                "cusp": self.cusp,
                "r_plus": {"re": self.r_plus_re, "im": self.r_plus_im},
                "r_minus": {"re": self.r_minus_re, "im": self.r_minus_im},
                "r_k": {
                    "re": self.r_plus_re + self.r_minus_re,
                    "im": self.r_plus_im + self.r_minus_im,
                },
                "density": self.density,
            },
            "envelopes": self.envelopes,
            "diagnostics": self.diagnostics,
        }

    CSV_FIELDS = (
        "a", "b", "t", "L", "integral", "cusp",
        "r_plus_re", "r_plus_im", "r_minus_re", "r_minus_im",
        "density", "im_residue", "r_trunc_effective", "word_cap",
        "resolution", "cusp_cutoff",
    )

    def csv_row(self) -> list:
        d = self.diagnostics
        return [
            self.window["a"], self.window["b"], self.window["t"],
            self.window["L"], self.integral, self.cusp,
            self.r_plus_re, self.r_plus_im, self.r_minus_re, self.r_minus_im,
            self.density, d["im_residue"], d["r_trunc_effective"],
            d["word_cap"], d["resolution"], d["cusp_cutoff"],
        ]


# ---------------------------------------------------------------------------
# the group-sum engine
# ---------------------------------------------------------------------------


def _merge_probes(
    grid: DomainGrid, max_radius: float = 0.45
) -> tuple[list[tuple[complex, float]], list[list[int]]]:
    """Cluster grid cells into probes of bounded radius.

    Returns the probe list and, per probe, the indices of the grid cells
    it covers; the probes drive both the enumeration prune and the
    block-filtered accumulation.
    """
    probes: list[tuple[complex, float]] = []
    members: list[list[int]] = []
    for ci, (start, end, zc, rad) in enumerate(grid.cells):
        placed = False
        for i, (zp, rp) in enumerate(probes):
            d = math.acosh(
                1.0 + (abs(zc - zp) ** 2) / (2.0 * zc.imag * zp.imag)
            )
            if d + rad <= max_radius:
                probes[i] = (zp, max(rp, d + rad))
                members[i].append(ci)
                placed = True
                break
        if not placed:
            probes.append((zc, rad))
            members.append([ci])
    return probes, members


def _eps_values(chi: np.ndarray, trace: np.ndarray) -> np.ndarray:
    return np.where(trace > 0.0, chi, -chi).astype(float)


def _geometric_core(
    model: SurfaceModel,
    p: WindowParams,
    L: float,
    s: TraceSettings,
    grid: DomainGrid,
    r_eff: float,
    table,
    coarse_grid: Optional[DomainGrid] = None,
) -> tuple[complex, complex, dict]:
    """Group enumeration and banded kernel accumulation at a fixed
    truncation radius.

    Distances up to r_split are accumulated on the fine grid; the far
    band (r_split, r_eff], whose integrand is smaller by the kernel's
    Gaussian decay, is integrated on the coarse companion grid.  Both
    grids are mirror symmetric, so the imaginary part cancels exactly.
    """
    group = model.group
    r_split = r_eff if coarse_grid is None else min(s.r_split, r_eff)
    probes, members = _merge_probes(grid, max_radius=0.85)
    if coarse_grid is not None and r_split < r_eff:
        coarse_probes, coarse_members = _merge_probes(coarse_grid, max_radius=0.55)
    else:
        coarse_probes, coarse_members = [], []
        coarse_grid = None
    search_probes = [
        (zp, min(r_split, r_eff) + 2.0 * rp + s.slack) for zp, rp in probes
    ] + [
        (zp, r_eff + 2.0 * rp + s.slack) for zp, rp in coarse_probes
    ]
    search = _run_ball_search(
        group,
        search_probes,
        s.word_cap,
        s.budget,
        mode="frontier",
        gen_signs=model.spin.signs,
        keep_words=False,
    )
    ga = np.concatenate([lvl.a for lvl in search.levels]) if search.levels else np.empty(0)
    gb = np.concatenate([lvl.b for lvl in search.levels]) if search.levels else np.empty(0)
    gc = np.concatenate([lvl.c for lvl in search.levels]) if search.levels else np.empty(0)
    gd = np.concatenate([lvl.d for lvl in search.levels]) if search.levels else np.empty(0)
    gchi = (
        np.concatenate([lvl.chi for lvl in search.levels]).astype(np.float64)
        if search.levels else np.empty(0)
    )
    depth_used = len(search.levels)
    search.levels.clear()
    gtr = ga + gd
    ghyp = np.abs(gtr) > 2.0 + 1e-10
    geps = _eps_values(gchi, gtr)
    # pair evaluation runs in float32: gamma2 entries in range are integer
    # exact, and the 1e-7 relative distance error moves only kernel values,
    # orders of magnitude below the quadrature error
    ga32 = ga.astype(np.float32)
    gb32 = gb.astype(np.float32)
    gc32 = gc.astype(np.float32)
    gd32 = gd.astype(np.float32)

    chunk_cap = 1 << 22
    n_threads = s.threads
    if n_threads is None:
        n_threads = int(os.environ.get("DIRACTRACE_THREADS", "1"))

    def run_band(band_grid, band_probes, band_members, cosh_lo, cosh_hi,
                 filter_radius, refine_cells):
        """Accumulate pairs with cosh_lo < cosh d <= cosh_hi on one grid.

        ``refine_cells`` refilters each cell from its super-block subset
        (worthwhile for the near band, whose filter radius is small); the
        far band accumulates per super-block directly.
        """
        pts = band_grid.points
        wts = band_grid.weights

        def block_job(bi):
            zp, rp = band_probes[bi]
            cells = band_members[bi]
            if ga.size == 0 or not cells:
                return None
            # super-block filter once against the full element list
            blockform = displacement_form(np.array([zp]))
            coshd_c = cosh_displacements(ga, gb, gc, gd, blockform)[:, 0]
            sel = np.nonzero(
                coshd_c <= math.cosh(min(filter_radius + 2.0 * rp, 700.0))
            )[0]
            if sel.size == 0:
                return None
            vsel = np.column_stack((ga32[sel], gb32[sel], gc32[sel], gd32[sel]))
            shyp = ghyp[sel]
            seps = geps[sel]
            if refine_cells:
                units = [
                    (np.arange(band_grid.cells[ci][0], band_grid.cells[ci][1]),
                     band_grid.cells[ci][2], band_grid.cells[ci][3])
                    for ci in cells
                ]
            else:
                merged = np.concatenate(
                    [np.arange(band_grid.cells[ci][0], band_grid.cells[ci][1])
                     for ci in cells]
                )
                units = [(merged, zp, rp)]
            out = []
            for node_idx, zc, rad in units:
                z = pts[node_idx]
                nz = z.size
                if nz == 0:
                    continue
                if refine_cells:
                    cellform = displacement_form(np.array([zc])).astype(np.float32)
                    cd = cosh_displacements_rows(vsel, cellform)[:, 0]
                    csel = np.nonzero(
                        cd <= math.cosh(min(filter_radius + 2.0 * rad, 700.0))
                    )[0]
                    if csel.size == 0:
                        continue
                    vcell = vsel[csel]
                    chyp = shyp[csel]
                    ceps = seps[csel]
                else:
                    csel = None
                    vcell = vsel
                    chyp = shyp
                    ceps = seps
                form32 = displacement_form(z).astype(np.float32)
                z32 = z.astype(np.complex64)
                zbar32 = np.conj(z32)
                absz2 = (z32.real**2 + z32.imag**2).astype(np.float32)
                acc = np.zeros(nz, dtype=complex)
                mins = np.full(nz, cosh_hi, dtype=float)
                used = 0
                amass = 0.0
                nrows = vcell.shape[0]
                step = max(1, chunk_cap // max(nz, 1))
                for lo in range(0, nrows, step):
                    hi = min(lo + step, nrows)
                    coshd = cosh_displacements_rows(vcell[lo:hi], form32)
                    np.minimum(mins, coshd.min(axis=0).astype(float), out=mins)
                    inband = (coshd <= cosh_hi) & chyp[lo:hi, None]
                    if cosh_lo > 1.0:
                        inband &= coshd > cosh_lo
                    gi, ni = np.nonzero(inband)
                    if gi.size == 0:
                        continue
                    used += gi.size
                    dists = np.arccosh(np.maximum(coshd[gi, ni], np.float32(1.0)))
                    kvals = table.gather32(dists)
                    va = vcell[lo:hi][gi]
                    aa, bb, cc, dd = va[:, 0], va[:, 1], va[:, 2], va[:, 3]
                    zn = z32[ni]
                    # transport z -> gamma^{-1} z via the normalized product
                    # M = (az + b - c|z|^2 - d conj z)(a - cz); tau = -i M/|M|
                    m = (aa * zn + (bb - cc * absz2[ni]) - dd * zbar32[ni]) \
                        * (aa - cc * zn)
                    m /= np.abs(m)
                    epk = ceps[lo:hi][gi] * kvals
                    amass += float(np.abs(kvals) @ wts[node_idx[ni]])
                    acc = acc + np.bincount(ni, weights=epk * m.imag, minlength=nz) \
                        - 1j * np.bincount(ni, weights=epk * m.real, minlength=nz)
                out.append((node_idx, acc, mins, used, amass))
            return out

        jobs = range(len(band_probes))
        if n_threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                results = list(pool.map(block_job, jobs))
        else:
            results = [block_job(bi) for bi in jobs]

        node_acc = np.zeros(pts.shape, dtype=complex)
        node_min = np.full(pts.shape, cosh_hi, dtype=float)
        used_total = 0
        amass_total = 0.0
        for res in results:
            if res is None:
                continue
            for node_idx, acc, mins, used, amass in res:
                node_acc[node_idx] += acc
                node_min[node_idx] = np.minimum(node_min[node_idx], mins)
                used_total += used
                amass_total += amass
        return node_acc, node_min, used_total, amass_total

    near_cut = min(r_split, r_eff)
    near_acc, near_min, near_pairs, near_mass = run_band(
        grid, probes, members, 1.0, math.cosh(near_cut), near_cut,
        refine_cells=True,
    )
    far_pairs = 0
    far_mass = 0.0
    if coarse_grid is not None:
        far_acc, far_min, far_pairs, far_mass = run_band(
            coarse_grid, coarse_probes, coarse_members,
            math.cosh(near_cut), math.cosh(r_eff), r_eff,
            refine_cells=False,
        )
    pairs_used = near_pairs + far_pairs
    abs_accum = near_mass + far_mass

    def split_terms(band_grid, node_acc, node_min, cut):
        inj = 0.5 * np.arccosh(np.maximum(node_min, 1.0))
        floored = node_min >= math.cosh(cut) * (1.0 - 1e-12)
        thin = inj < L
        uncertain = int(np.sum(floored & (0.5 * cut < L)))
        weighted = band_grid.weights * node_acc
        rm = complex(np.sum(weighted[thin]))
        rpl = complex(np.sum(weighted[~thin]))
        thin_area = float(np.sum(band_grid.weights[thin]))
        return rpl, rm, thin_area, uncertain

    rpl_n, rm_n, thin_area, uncertain = split_terms(grid, near_acc, near_min, near_cut)
    r_plus, r_minus = rpl_n, rm_n
    if coarse_grid is not None:
        rpl_f, rm_f, _, unc_f = split_terms(coarse_grid, far_acc, far_min, r_eff)
        r_plus += rpl_f
        r_minus += rm_f
        uncertain += unc_f
    r_plus /= 2.0 * model.area
    r_minus /= 2.0 * model.area

    needed = group.complete_word_length(r_eff)
    diag = {
        "r_trunc_effective": r_eff,
        "r_split": near_cut,
        "accumulated_abs_mass": abs_accum / (2.0 * model.area),
        "word_cap": s.word_cap,
        "bfs_depth_used": depth_used,
        "bfs_nodes_visited": search.nodes_visited,
        "elements_enumerated": int(ga.size),
        "elements_hyperbolic": int(ghyp.sum()),
        "pairs_used": pairs_used,
        "pairs_near": near_pairs,
        "pairs_far": far_pairs,
        "nodes": int(grid.points.size),
        "nodes_far_band": int(coarse_grid.points.size) if coarse_grid is not None else 0,
        "resolution": s.resolution,
        "cusp_cutoff": s.cusp_cutoff,
        "truncated_area": grid.truncated_area,
        "thin_area": thin_area,
        "thin_fraction_of_area": thin_area / model.area,
        "thin_classification_uncertain_nodes": uncertain,
        "possibly_incomplete": bool(needed is None or s.word_cap < needed),
        "L": L,
    }
    return r_plus, r_minus, diag


def geometric_term(
    model: SurfaceModel,
    p: WindowParams,
    L: float,
    settings: Optional[TraceSettings] = None,
) -> GeometricTermResult:
    """Thin/thick split of the group-sum term of the pretrace identity.

    Enumerates the group once against a probe cover of the quadrature
    grid, then accumulates per-node kernel sums blockwise; nodes are
    assigned to the thin (R_minus) or thick (R_plus) side by their local
    injectivity radius, half the minimal enumerated displacement.

    The truncation radius follows the envelope-times-counting rule (tail
    below ``tail_rel_target`` of the accumulated value, with the scale
    estimated by a cheap pre-pass when no hint is configured) and is
    capped at the radius where the same bound certifies additions below
    ``cap_rel`` of the accumulated value.
    """
    if not (L > 0.0):
        raise DomainError(f"thin/thick threshold must be positive, got L={L}")
    s = settings or model.settings
    group = model.group
    nontrivial, _, _ = cusp_report(model.spin, group)
    if not nontrivial:
        raise ValidationError("trace evaluation requires a nontrivial spin structure")

    grid = build_domain_grid(
        group, s.resolution, cusp_cutoff=s.cusp_cutoff, angle_cos=s.angle_cos
    )
    systole = systole_estimate(group, s.systole_word_len)
    r_sys = min(2.0, systole / 2.0)
    area_ratio = grid.truncated_area / model.area
    rho_lo = max(0.05, 0.85 * systole)

    # the truncation rule compares the neglected tail with the value the
    # evaluation accumulates: the density terms this sum feeds plus the
    # absolute kernel mass gathered so far (see the decisions ledger on
    # this reading of the rule)
    density_scale = abs(integral_term(p)) + abs(cusp_term(model, p))

    hint = s.accum_hint
    prepass_value = None
    if hint is None:
        pre_table = WindowKernelTable.for_window(
            p, rho_lo=rho_lo, rho_hi=math.ceil(s.prepass_radius) + 0.1
        )
        _, _, prediag = _geometric_core(
            model, p, L, s, grid, min(s.prepass_radius, 0.75 * s.word_cap), pre_table
        )
        prepass_value = prediag["accumulated_abs_mass"]
        hint = max(0.5 * (density_scale + prepass_value), 1e-4)

    r_rule = _solve_truncation_radius(p, r_sys, area_ratio, s.tail_rel_target * hint)
    r_cap = max(
        _solve_truncation_radius(p, r_sys, area_ratio, s.cap_rel * hint),
        r_rule + 1.0,
    )
    r_requested = s.r_trunc if s.r_trunc is not None else r_rule
    r_eff = min(r_requested, r_cap)

    table = WindowKernelTable.for_window(
        p, rho_lo=rho_lo, rho_hi=math.ceil(r_cap) + 0.1
    )
    coarse_grid = None
    if r_eff > s.r_split:
        coarse_grid = build_domain_grid(
            group, s.resolution, cusp_cutoff=s.cusp_cutoff,
            angle_cos=s.angle_cos, coarse=True,
        )
    r_plus, r_minus, diag = _geometric_core(
        model, p, L, s, grid, r_eff, table, coarse_grid=coarse_grid
    )

    # posterior check of the tail rule against the accumulated value
    accum = density_scale + diag["accumulated_abs_mass"] + abs((r_plus + r_minus).real)
    tail_eff = truncation_tail_bound(p, r_sys, area_ratio, r_eff)
    if (
        s.r_trunc is None
        and tail_eff > s.tail_rel_target * accum
        and r_eff < r_cap
    ):
        r_eff = min(
            _solve_truncation_radius(
                p, r_sys, area_ratio, s.tail_rel_target * 0.5 * accum
            ),
            r_cap,
        )
        r_plus, r_minus, diag = _geometric_core(
            model, p, L, s, grid, r_eff, table, coarse_grid=coarse_grid
        )
        accum = (
            density_scale
            + diag["accumulated_abs_mass"]
            + abs((r_plus + r_minus).real)
        )
        tail_eff = truncation_tail_bound(p, r_sys, area_ratio, r_eff)

    diag.update(
        {
            "systole": systole,
            "r_sys": r_sys,
            "r_trunc_rule": r_rule,
            "r_trunc_requested": r_requested,
            "r_trunc_cap": r_cap,
            "accum_hint_used": hint,
            "prepass_abs_mass": prepass_value,
            "density_scale_used": density_scale,
            "tail_bound_at_effective": tail_eff,
            "tail_rule_satisfied": bool(tail_eff <= s.tail_rel_target * accum),
        }
    )
    return GeometricTermResult(r_plus, r_minus, diag)


def smoothed_density(
    model: SurfaceModel,
    p: WindowParams,
    L: Optional[float] = None,
    settings: Optional[TraceSettings] = None,
) -> TraceReport:
    """Assemble integral, cusp and group-sum terms into a TraceReport.

    The density I + C + Re R_K equals the smoothed spectral counting
    density of the identity; the imaginary residue of R_K must stay
    below max(1e-6 |Re R_K|, 1e-9) or the evaluation aborts.
    """
    s = settings or model.settings
    if L is None:
        L = 8.0 * p.t * p.t
    ival = integral_term(p)
    cval = cusp_term(model, p)
    geo = geometric_term(model, p, L, s)
    r_k = geo.r_k
    im_residue = abs(r_k.imag)
    if im_residue > max(IM_RESIDUE_REL * abs(r_k.real), IM_RESIDUE_ABS):
        raise NumericError(
            f"imaginary residue {im_residue:.3e} exceeds the reality tolerance "
            f"(Re R_K = {r_k.real:.6e})"
        )
    density = ival + cval + r_k.real

    envelopes = {
        "prop6_integral_vs_main": prop6_envelope(p),
        "prop7_cusp": prop7_envelope(model.genus, model.cusps, p),
        "prop10_kernel_at_systole": prop10_envelope(
            p, max(geo.diagnostics["systole"], 1e-6)
        ),
    }
    r_sys = geo.diagnostics["r_sys"]
    if L >= 8.0 * p.t * p.t:
        envelopes["lemma12_thick"] = lemma12_envelope(p, r_sys, L)
    envelopes["lemma13_thin"] = lemma13_envelope(
        p, r_sys, L, geo.diagnostics["thin_fraction_of_area"]
    )

    diag = dict(geo.diagnostics)
    diag["im_residue"] = im_residue

    return TraceReport(
        window={"a": p.a, "b": p.b, "t": p.t, "L": L},
        model={
            "model": model.group.model,
            "genus": model.genus,
            "cusps": model.cusps,
            "area": model.area,
            "spin_signs": list(model.spin.signs),
            "basepoint": {"x": model.basepoint.x, "y": model.basepoint.y},
        },
        integral=ival,
        cusp=cval,
        r_plus_re=geo.r_plus.real,
        r_plus_im=geo.r_plus.imag,
        r_minus_re=geo.r_minus.real,
        r_minus_im=geo.r_minus.imag,
        density=density,
        envelopes=envelopes,
        diagnostics=diag,
    )


def stability_probes(
    model: SurfaceModel,
    p: WindowParams,
    L: Optional[float] = None,
    settings: Optional[TraceSettings] = None,
) -> dict:
    """Reference density plus the four doubled-knob probe densities.

    Doubles, one at a time: truncation radius (subject to the noise-floor
    cap), word cap, grid resolution and cusp cutoff.  Returns the
    reference report and relative deltas.
    """
    s = settings or model.settings
    base = smoothed_density(model, p, L, s)
    r_eff = base.diagnostics["r_trunc_effective"]
    # probe runs reuse the reference run's accumulated-value hint, which
    # skips their pre-passes without changing any radii
    hint = base.diagnostics["accum_hint_used"]
    s = replace(s, accum_hint=hint)
    variants = {
        "r_trunc_doubled": replace(s, r_trunc=2.0 * r_eff),
        "word_cap_doubled": replace(s, word_cap=2 * s.word_cap),
        "resolution_doubled": replace(s, resolution=2 * s.resolution),
        "cusp_cutoff_doubled": replace(s, cusp_cutoff=2.0 * s.cusp_cutoff),
    }
    scale = max(abs(base.density), 1e-12)
    out = {"reference": base, "deltas": {}}
    for name, vs in variants.items():
        rep = smoothed_density(model, p, L, vs)
        out["deltas"][name] = abs(rep.density - base.density) / scale
    return out


# ---------------------------------------------------------------------------
# schedules and derived evaluators
# ---------------------------------------------------------------------------


def parameter_schedule(g: float) -> tuple[float, float, float]:
    """(t, L, r) with t = sqrt(log g)/(4 sqrt 3), L = 8 t^2, r = sqrt(log g)/(2 g^{1/24}).

    Real-valued g >= 2 is accepted (only sqrt(log g) matters here);
    L = 8 t^2 holds exactly by construction.
    """
    if not (g >= 2.0):
        raise DomainError(f"schedule requires g >= 2, got {g}")
    root = math.sqrt(math.log(g))
    t = root / (4.0 * math.sqrt(3.0))
    L = 8.0 * t * t
    r = root / (2.0 * g ** (1.0 / 24.0))
    return t, L, r


def smoothing_edge_offset(p: WindowParams) -> float:
    """Edge offset eta = (1/t) sqrt(log(sqrt(e/2) t (b - a))).

    Defined in the regime t (b - a) >= sqrt(2e); outside it the trivial
    bound branch applies and a DomainError signals that.  The offset
    satisfies 1/t <= eta <= (b - a)/2.
    """
    x = p.t * (p.b - p.a)
    threshold = math.sqrt(2.0 * math.e)
    if x < threshold * (1.0 - 1e-12):
        raise DomainError(
            f"edge offset needs t(b - a) >= sqrt(2e) ~ {threshold:.6f}, got {x:.6f}"
        )
    eta = math.sqrt(max(math.log(math.sqrt(math.e / 2.0) * x), 0.0)) / p.t
    lo, hi = 1.0 / p.t, (p.b - p.a) / 2.0
    if not (lo - 1e-12 <= eta <= hi + 1e-12):
        raise NumericError(f"edge offset {eta} escaped [{lo}, {hi}]")
    return eta


def remainder_window(
    g: float, p: WindowParams, coefficient: float = 1.0
) -> tuple[float, float]:
    """Two-sided window for the normalized counting density.

    The remainder around the main term is bounded below by -C (b+1)/sqrt(log g)
    and above by the same scale times 1 + sqrt(log(2 + (b-a) sqrt(log g))).
    The coefficient C defaults to the nominal value 1 (existence is what
    the source proves; the constant is configuration).
    """
    if not (g >= 2.0):
        raise DomainError(f"requires g >= 2, got {g}")
    m = main_term(p.a, p.b)
    root = math.sqrt(math.log(g))
    scale = coefficient * (p.b + 1.0) / root
    upper = scale * (1.0 + math.sqrt(math.log(2.0 + (p.b - p.a) * root)))
    return m - scale, m + upper


def counting_upper_bound(g: float, p: WindowParams, coefficient: float = 1.0) -> float:
    """O-evaluator (b + 1)(b - a + 1/sqrt(log g)) with unit default constant."""
    if not (g >= 2.0):
        raise DomainError(f"requires g >= 2, got {g}")
    return coefficient * (p.b + 1.0) * (p.b - p.a + 1.0 / math.sqrt(math.log(g)))


def weyl_leading(lam: float) -> float:
    """Leading counting asymptotic lam^2 / (8 pi); documented for lam >= 1."""
    if lam < 0.0:
        raise DomainError(f"requires lam >= 0, got {lam}")
    return lam * lam / (8.0 * math.pi)


def multiplicity_bound(g: float, lam: float, coefficient: float = 1.0) -> float:
    """O-evaluator (lam + 1)/sqrt(log g) for normalized eigenvalue multiplicity."""
    if not (g >= 2.0):
        raise DomainError(f"requires g >= 2, got {g}")
    if lam < 0.0:
        raise DomainError(f"requires lam >= 0, got {lam}")
    return coefficient * (lam + 1.0) / math.sqrt(math.log(g))


def pinched_low_eigenvalue_count(eta: float, ell: float) -> float:
    """Leading count -(eta/pi) log(ell) of low eigenvalues created by
    pinching a geodesic of length ell < 1 (the O_eta(1) term is not
    modeled)."""
    if not (eta > 0.0):
        raise DomainError(f"requires eta > 0, got {eta}")
    if not (0.0 < ell < 1.0):
        raise DomainError(f"pinch prediction regime is 0 < ell < 1, got {ell}")
    return -(eta / math.pi) * math.log(ell)


def in_good_set(g: float, systole: float, thin_fraction: float) -> bool:
    """Membership predicate of the good set: systole >= g^{-1/24} sqrt(log g)
    and thin-part fraction <= g^{-1/3}."""
    if not (g >= 2.0):
        raise DomainError(f"requires g >= 2, got {g}")
    sys_threshold = g ** (-1.0 / 24.0) * math.sqrt(math.log(g))
    return systole >= sys_threshold and thin_fraction <= g ** (-1.0 / 3.0)
