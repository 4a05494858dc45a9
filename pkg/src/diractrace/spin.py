"""Spin structures as sign characters on generator lifts.

A spin assignment fixes a sign for each generator's chosen SL(2,R) lift.
The character extends multiplicatively over words, sends -I to -1, and
the value on a group element is read off from the lift with positive
trace: evaluate the signed word product, flip the sign when its trace is
negative.  The resulting function is constant on conjugacy classes and
invariant under inversion, which the test suite checks numerically.

Discreteness of the Dirac spectrum needs the character to equal -1 on a
representative of every primitive parabolic class (the cusp condition);
the model groups ship with their representative sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional

from .errors import DomainError, ValidationError
from .groups import GroupPresentation
from .halfplane import IDENTITY, MoebiusElement, compose

__all__ = [
    "SpinAssignment",
    "epsilon",
    "is_nontrivial",
    "cusp_report",
    "enumerate_spin_assignments",
    "GAMMA2_CUSP_WORDS",
]

# Representatives of the primitive parabolic conjugacy classes of the
# gamma2 model: the two generators and B^{-1} A (fixing infinity, 0 and
# the glued cusp at +-1).  This is an artifact convention for the model
# group, not something the source mathematics singles out.
GAMMA2_CUSP_WORDS: tuple[tuple[int, ...], ...] = ((1,), (2,), (-2, 1))


@dataclass(frozen=True)
class SpinAssignment:
    """One sign in {+1, -1} per group generator."""

    signs: tuple[int, ...]

    def __post_init__(self):
        if not self.signs or any(s not in (-1, 1) for s in self.signs):
            raise ValidationError(f"signs must be +-1, got {self.signs!r}")

    @classmethod
    def from_json(cls, doc) -> "SpinAssignment":
        import json

        if isinstance(doc, str):
            doc = json.loads(doc)
        if "signs" not in doc:
            raise ValidationError("spin file requires 'signs'")
        return cls(tuple(int(s) for s in doc["signs"]))

    def to_json(self) -> dict:
        return {"signs": list(self.signs)}


def _word_product(group: GroupPresentation, word: tuple[int, ...]) -> MoebiusElement:
    m = IDENTITY
    for k in word:
        g = group.generators[abs(k) - 1]
        m = compose(m, g if k > 0 else g.inverse())
    return m


def epsilon(
    assignment: SpinAssignment,
    element: MoebiusElement,
    group: GroupPresentation,
) -> int:
    """Character value on ``element`` via its positive-trace lift.

    The element must carry word provenance.  The signed word product w of
    the generator lifts is formed; the value is chi(w) = product of the
    generator signs along the word when tr(w) > 0, and -chi(w) otherwise.
    Trace-zero elements admit no positive-trace lift and are rejected.
    """
    if element.word is None:
        raise DomainError("epsilon needs word provenance on the element")
    if len(assignment.signs) != group.rank:
        raise ValidationError(
            f"assignment has {len(assignment.signs)} signs for a rank-"
            f"{group.rank} group"
        )
    chi = 1
    for k in element.word:
        chi *= assignment.signs[abs(k) - 1]
    w = _word_product(group, element.word)
    tr = w.trace()
    if abs(tr) < 1e-10:
        raise DomainError(f"no positive-trace lift: |trace| = {abs(tr):.2e} < 1e-10")
    return chi if tr > 0.0 else -chi


def cusp_report(
    assignment: SpinAssignment, group: GroupPresentation
) -> tuple[bool, bool, list[tuple[tuple[int, ...], int]]]:
    """(nontrivial, vacuous, per-representative values) for the model group."""
    if group.model == "cyclic":
        return True, True, []
    if group.model == "gamma2":
        values = []
        ok = True
        for word in GAMMA2_CUSP_WORDS:
            m = _word_product(group, word)
            val = epsilon(assignment, MoebiusElement(m.a, m.b, m.c, m.d, word), group)
            values.append((word, val))
            ok = ok and (val == -1)
        return ok, False, values
    raise ValidationError(
        "cusp representatives are only known for the model groups"
    )


def is_nontrivial(assignment: SpinAssignment, group: GroupPresentation) -> bool:
    """True when epsilon is -1 on every primitive parabolic representative.

    Cyclic groups have no cusps, so every assignment is vacuously
    nontrivial there (``cusp_report`` exposes the vacuity flag).
    """
    ok, _, _ = cusp_report(assignment, group)
    return ok


def enumerate_spin_assignments(
    group: GroupPresentation,
) -> list[tuple[SpinAssignment, Optional[bool]]]:
    """All 2^n sign assignments with their nontriviality flags.

    The flag is None for custom groups, whose primitive parabolic
    representatives are unknown.
    """
    if group.rank > 20:
        raise DomainError(
            f"refusing to enumerate 2^{group.rank} assignments (rank > 20)"
        )
    out = []
    for combo in product((+1, -1), repeat=group.rank):
        assignment = SpinAssignment(combo)
        if group.model == "custom":
            out.append((assignment, None))
        else:
            out.append((assignment, is_nontrivial(assignment, group)))
    return out
