import math

import pytest

from diractrace.errors import DomainError, ValidationError
from diractrace.groups import GroupPresentation, enumerate_ball
from diractrace.halfplane import HPoint, IDENTITY, MoebiusElement, compose
from diractrace.spin import (
    SpinAssignment,
    cusp_report,
    enumerate_spin_assignments,
    epsilon,
    is_nontrivial,
)

G2 = GroupPresentation.gamma2()
NONTRIV = SpinAssignment((-1, -1))


def word_matrix(group, word):
    m = IDENTITY
    for k in word:
        g = group.generators[abs(k) - 1]
        m = compose(m, g if k > 0 else g.inverse())
    return m


class TestEpsilon:
    def test_generator(self):
        a = word_matrix(G2, (1,))
        assert epsilon(NONTRIV, a, G2) == -1

    def test_positive_trace_product(self):
        ab = word_matrix(G2, (1, 2))
        assert ab.entries() == (5.0, 2.0, 2.0, 1.0)
        assert ab.trace() == 6.0
        assert epsilon(NONTRIV, ab, G2) == 1

    def test_negative_trace_branch(self):
        w = word_matrix(G2, (-2, 1))
        assert w.entries() == (1.0, 2.0, -2.0, -3.0)
        assert w.trace() == -2.0
        assert epsilon(NONTRIV, w, G2) == -1

    def test_requires_word(self):
        bare = MoebiusElement(5, 2, 2, 1)
        with pytest.raises(DomainError):
            epsilon(NONTRIV, bare, G2)

    def test_trace_zero_rejected(self):
        g1 = MoebiusElement(1, 1, 0, 1)
        g2 = MoebiusElement(2, -1.0 / 3.0, -3, 1)
        g = GroupPresentation.custom([g1, g2])
        w = MoebiusElement(1, 1, 0, 1, word=(1, 2))  # product has trace 0
        with pytest.raises(DomainError):
            epsilon(SpinAssignment((-1, -1)), w, g)

    def test_class_function(self, rng):
        # epsilon is constant along conjugacy classes
        ball = enumerate_ball(G2, HPoint(0, 1), 6.0, 14)
        hyp = [e for e in ball if e.klass == "hyperbolic"]
        conjugators = [e.element for e in ball][:40]
        checked = 0
        for e in hyp[:25]:
            base = epsilon(NONTRIV, e.element, G2)
            for s in conjugators:
                c = compose(compose(s, e.element), s.inverse())
                assert epsilon(NONTRIV, c, G2) == base
                checked += 1
        assert checked >= 1000

    def test_inversion_invariance(self):
        ball = enumerate_ball(G2, HPoint(0, 1), 6.0, 14)
        for e in ball:
            if abs(e.element.trace()) < 1e-10:
                continue
            assert epsilon(NONTRIV, e.element, G2) == epsilon(
                NONTRIV, e.element.inverse(), G2
            )

    def test_word_spelling_independence(self):
        # inserting x x^-1 does not change the value
        base = word_matrix(G2, (1, 2))
        padded = word_matrix(G2, (1, -2, 2, 2))
        assert padded.entries() == pytest.approx(base.entries(), abs=1e-12)
        assert epsilon(NONTRIV, base, G2) == epsilon(NONTRIV, padded, G2)
        padded2 = word_matrix(G2, (-1, 1, 1, 2))
        assert epsilon(NONTRIV, padded2, G2) == epsilon(NONTRIV, base, G2)


class TestNontriviality:
    def test_all_minus_is_nontrivial(self):
        assert is_nontrivial(NONTRIV, G2)

    def test_generator_violation(self):
        assert not is_nontrivial(SpinAssignment((1, -1)), G2)
        assert not is_nontrivial(SpinAssignment((-1, 1)), G2)

    def test_mixed_cusp_violation(self):
        # (+1, +1) fails on both generators and on the third cusp class
        ok, vacuous, values = cusp_report(SpinAssignment((1, 1)), G2)
        assert not ok and not vacuous
        assert dict(values)[(-2, 1)] == -1  # negative-trace branch flips the product

    def test_cyclic_vacuous(self):
        g = GroupPresentation.cyclic(2.0)
        ok, vacuous, values = cusp_report(SpinAssignment((1,)), g)
        assert ok and vacuous and values == []
        assert is_nontrivial(SpinAssignment((-1,)), g)

    def test_custom_unsupported(self):
        g = GroupPresentation.custom([MoebiusElement(1, 2, 0, 1)])
        with pytest.raises(ValidationError):
            is_nontrivial(SpinAssignment((-1,)), g)


class TestEnumerateAssignments:
    def test_gamma2_exactly_one_nontrivial(self):
        out = enumerate_spin_assignments(G2)
        assert len(out) == 4
        good = [a.signs for a, ok in out if ok]
        assert good == [(-1, -1)]

    def test_cyclic_both_vacuously_nontrivial(self):
        out = enumerate_spin_assignments(GroupPresentation.cyclic(1.0))
        assert len(out) == 2
        assert all(ok for _, ok in out)

    def test_three_generator_cardinality(self):
        gens = [
            MoebiusElement(1, 2, 0, 1),
            MoebiusElement(1, 0, 2, 1),
            MoebiusElement(math.e, 0, 0, 1 / math.e),
        ]
        g = GroupPresentation.custom(gens)
        out = enumerate_spin_assignments(g)
        assert len(out) == 8
        assert all(flag is None for _, flag in out)

    def test_rank_limit(self):
        with pytest.raises(ValidationError):
            SpinAssignment((0, 1))
