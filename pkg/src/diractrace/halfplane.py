"""Upper half-plane geometry and real Moebius (SL(2,R)) arithmetic.

Matrices are stored with their sign: the sign is quotiented out for
geometric operations (classification, displacement) but retained because
the spin character lives on SL(2,R) lifts.  Elements optionally carry a
word, a tuple of signed 1-based generator indices recording how they were
composed; words concatenate under composition and drive the spin
character evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError

__all__ = [
    "MoebiusElement",
    "HPoint",
    "IDENTITY",
    "compose",
    "apply_moebius",
    "distance",
    "classify",
    "translation_length",
    "parallel_transport",
    "area_of_signature",
]

_DET_DRIFT = 1e-13
_PARABOLIC_BAND = 1e-10
_IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class HPoint:
    """A point x + iy of the upper half-plane, y > 0 strictly."""

    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 1e-300):
            raise DomainError(f"HPoint requires y > 1e-300, got y={self.y!r}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class MoebiusElement:
    """A unit-determinant real 2x2 matrix [[a, b], [c, d]].

    ``word`` is provenance only: a tuple of signed generator indices
    (+k for the k-th generator, -k for its inverse, 1-based).
    """

    a: float
    b: float
    c: float
    d: float
    word: Optional[tuple[int, ...]] = None

    @staticmethod
    def from_rows(rows, word: Optional[tuple[int, ...]] = None) -> "MoebiusElement":
        (a, b), (c, d) = rows
        return MoebiusElement(float(a), float(b), float(c), float(d), word).renormalized()

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def trace(self) -> float:
        return self.a + self.d

    def renormalized(self) -> "MoebiusElement":
        """Divide by sqrt(det) when determinant drift exceeds 1e-13."""
        det = self.det()
        if det <= 0.0:
            raise DomainError(f"element has non-positive determinant {det!r}")
        if abs(det - 1.0) <= _DET_DRIFT:
            return self
        s = 1.0 / math.sqrt(det)
        return MoebiusElement(self.a * s, self.b * s, self.c * s, self.d * s, self.word)

    def inverse(self) -> "MoebiusElement":
        word = None
        if self.word is not None:
            word = tuple(-k for k in reversed(self.word))
        return MoebiusElement(self.d, -self.b, -self.c, self.a, word)

    def neg(self) -> "MoebiusElement":
        return MoebiusElement(-self.a, -self.b, -self.c, -self.d, self.word)

    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def apply(self, z: HPoint) -> HPoint:
        return apply_moebius(self, z)

    def is_identity(self, tol: float = _IDENTITY_TOL) -> bool:
        """True when the matrix is +-I within ``tol`` entrywise."""
        for sign in (1.0, -1.0):
            if (
                abs(self.a - sign) <= tol
                and abs(self.d - sign) <= tol
                and abs(self.b) <= tol
                and abs(self.c) <= tol
            ):
                return True
        return False


IDENTITY = MoebiusElement(1.0, 0.0, 0.0, 1.0, word=())


def compose(m1: MoebiusElement, m2: MoebiusElement) -> MoebiusElement:
    """Matrix product m1 * m2 with determinant renormalization.

    Words concatenate when both factors carry one.
    """
    a = m1.a * m2.a + m1.b * m2.c
    b = m1.a * m2.b + m1.b * m2.d
    c = m1.c * m2.a + m1.d * m2.c
    d = m1.c * m2.b + m1.d * m2.d
    word = None
    if m1.word is not None and m2.word is not None:
        word = m1.word + m2.word
    return MoebiusElement(a, b, c, d, word).renormalized()


def apply_moebius(m: MoebiusElement, z: HPoint) -> HPoint:
    """The action z -> (az + b)/(cz + d)."""
    den = complex(m.c * z.x + m.d, m.c * z.y)
    if abs(den) < 1e-300:
        raise DomainError("degenerate denominator |cz + d| < 1e-300")
    w = (complex(m.a * z.x + m.b, m.a * z.y)) / den
    return HPoint(w.real, w.imag)


def distance(z: HPoint, w: HPoint) -> float:
    """Hyperbolic distance: arccosh(1 + |z - w|^2 / (2 Im z Im w))."""
    dx = z.x - w.x
    dy = z.y - w.y
    arg = 1.0 + (dx * dx + dy * dy) / (2.0 * z.y * w.y)
    return math.acosh(max(arg, 1.0))


def classify(m: MoebiusElement) -> str:
    """PSL(2,R) conjugacy type by |trace|.

    Returns one of ``identity``, ``elliptic``, ``parabolic``,
    ``hyperbolic``.  Traces within 1e-10 of +-2 classify as parabolic;
    generator matrices in the model groups are exact rationals, so the
    band only guards composed drift.  Stable under m -> -m.
    """
    if m.is_identity():
        return "identity"
    at = abs(m.trace())
    if at < 2.0 - _PARABOLIC_BAND:
        return "elliptic"
    if at <= 2.0 + _PARABOLIC_BAND:
        return "parabolic"
    return "hyperbolic"


def translation_length(m: MoebiusElement) -> float:
    """Translation length 2 arccosh(|tr|/2) of a hyperbolic element."""
    if classify(m) != "hyperbolic":
        raise DomainError("translation length is defined for hyperbolic elements only")
    return 2.0 * math.acosh(abs(m.trace()) / 2.0)


def parallel_transport(z: HPoint, w: HPoint) -> complex:
    """Unit complex factor -i (z - conj(w)) / |z - conj(w)|.

    This transports spinors from z to w; the denominator never vanishes
    for upper half-plane points.
    """
    v = complex(z.x - w.x, z.y + w.y)
    return complex(0.0, -1.0) * v / abs(v)


def area_of_signature(g: int, k: int) -> float:
    """Hyperbolic area 2 pi (2g - 2 + k) of a surface of signature (g, k)."""
    if g < 0 or k < 0 or int(g) != g or int(k) != k:
        raise DomainError(f"signature entries must be non-negative integers, got ({g}, {k})")
    chi = 2 * int(g) - 2 + int(k)
    if chi <= 0:
        raise DomainError(f"signature ({g}, {k}) is not hyperbolic: 2g - 2 + k = {chi}")
    return 2.0 * math.pi * chi
