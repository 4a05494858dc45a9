"""Built-in round-trip diagnostics of the transform machinery.

Two identities are exercised end to end:

* the operator pair: B(A f) = f, exactly solvable for exponentials and
  checked in sup norm for bump profiles;
* the kernel reconstruction: profile -> transform -> kernel recovers
  phi(4 sinh^2(r/2)) over a grid of radii.

These are the constructive content behind the pretrace kernel formula,
so the thresholds here are acceptance-level contracts, not soft targets.
"""

from __future__ import annotations

import math

import numpy as np

from .transforms import (
    ScalarFunction,
    abel_forward,
    abel_inverse,
    kernel_from_transform,
    smooth_bump,
    transform_from_profile,
)

__all__ = [
    "builtin_bumps",
    "narrow_bump",
    "roundtrip_sup_error",
    "ab_identity_report",
    "full_report",
]


def builtin_bumps() -> list[ScalarFunction]:
    """The three standard compactly supported profiles of the round trip."""
    return [
        smooth_bump(3.0, 2.5),
        smooth_bump(2.0, 1.8),
        smooth_bump(4.5, 3.0),
    ]


def narrow_bump() -> ScalarFunction:
    """Support [0, 1]; documented looser reconstruction threshold 1e-5."""
    return smooth_bump(0.5, 0.5)


def roundtrip_sup_error(
    phi: ScalarFunction,
    r_lo: float = 0.25,
    r_hi: float = 5.0,
    n_r: int = 96,
) -> float:
    """sup over the radius grid of |K_reconstructed(r) - phi(4 sinh^2(r/2))|."""
    h = transform_from_profile(phi)
    worst = 0.0
    for r in np.linspace(r_lo, r_hi, n_r):
        target = float(phi(np.array([4.0 * math.sinh(r / 2.0) ** 2]))[0])
        got = kernel_from_transform(h, float(r), rel_tol=1e-9)
        worst = max(worst, abs(got - target))
    return worst


def ab_identity_report() -> dict:
    """Exponential (analytic) and bump (sup-norm) checks of B(A f) = f."""
    exp_fn = ScalarFunction(
        fn=lambda x: np.exp(-x),
        deriv=lambda x: -np.exp(-x),
        support=(0.0, 40.0),
        label="exp(-x)",
    )
    a_exp = abel_forward(exp_fn)
    xs = np.linspace(0.0, 6.0, 13)
    exp_err = max(
        abs(float(a_exp(np.array([x]))[0]) - math.sqrt(math.pi) / 2.0 * math.exp(-x))
        for x in xs
    )
    # analytic A-image handed to B: isolates the B quadrature error
    a_exact = ScalarFunction(
        fn=lambda x: math.sqrt(math.pi) / 2.0 * np.exp(-x),
        deriv=lambda x: -math.sqrt(math.pi) / 2.0 * np.exp(-x),
        support=(0.0, 40.0),
        label="A[exp]",
    )
    b_exp = abel_inverse(a_exact)
    ba_exp_err = max(
        abs(float(b_exp(np.array([x]))[0]) - math.exp(-x)) for x in xs
    )
    bump = smooth_bump(3.0, 2.5)
    ba_bump = abel_inverse(abel_forward(bump))
    xs_b = np.linspace(0.0, 10.0, 81)
    bump_err = float(np.max(np.abs(ba_bump(xs_b) - bump(xs_b))))
    return {
        "forward_exp_error": exp_err,
        "roundtrip_exp_error": ba_exp_err,
        "roundtrip_bump_sup_error": bump_err,
    }


def full_report(include_narrow: bool = True) -> dict:
    """Round-trip and operator-identity errors with their thresholds."""
    ab = ab_identity_report()
    bumps = builtin_bumps()
    entries = []
    ok = ab["roundtrip_exp_error"] <= 1e-9 and ab["roundtrip_bump_sup_error"] <= 1e-7
    for i, phi in enumerate(bumps):
        sup_phi = 1.0
        err = roundtrip_sup_error(phi)
        tol = 1e-6 * (1.0 + sup_phi)
        entries.append({"bump": phi.label, "sup_error": err, "tolerance": tol})
        ok = ok and err <= tol
    if include_narrow:
        err = roundtrip_sup_error(narrow_bump())
        entries.append(
            {"bump": "narrow " + narrow_bump().label, "sup_error": err,
             "tolerance": 1e-5}
        )
        ok = ok and err <= 1e-5
    return {
        "schema": "roundtrip_report.v1",
        "operator_identity": ab,
        "kernel_roundtrip": entries,
        "passed": bool(ok),
    }
