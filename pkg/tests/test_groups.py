import math
from itertools import product

import numpy as np
import pytest

from diractrace.errors import BudgetExceededError, DomainError, ValidationError
from diractrace.groups import (
    GroupPresentation,
    build_domain_grid,
    counting_bound,
    enumerate_ball,
    fundamental_domain_grid,
    group_from_json,
    group_to_json,
    systole_estimate,
)
from diractrace.halfplane import HPoint, MoebiusElement, classify, compose, distance

I_PT = HPoint(0.0, 1.0)


def brute_force_ball(group, z0, radius, max_len):
    """Exhaustive reduced-word enumeration without any pruning."""
    letters = group.letters()
    out = {}
    frontier = [((), None, None)]
    for _ in range(max_len):
        new = []
        for word, last, mat in frontier:
            for li, letter in enumerate(letters):
                if last is not None and li == (last ^ 1):
                    continue
                m = letter if mat is None else compose(mat, letter)
                w = word + (group.signed_index(li),)
                new.append((w, li, m))
                d = distance(z0, m.apply(z0))
                if d <= radius:
                    out[w] = d
        frontier = new
    return out


class TestCyclicEnumeration:
    def test_spec_example(self):
        g = GroupPresentation.cyclic(2.0)
        ball = enumerate_ball(g, I_PT, 7.0, 10)
        assert len(ball) == 6
        disps = sorted(round(e.displacement, 9) for e in ball)
        assert disps == [2.0, 2.0, 4.0, 4.0, 6.0, 6.0]
        assert not ball.possibly_incomplete
        assert all(e.klass == "hyperbolic" for e in ball)

    def test_counts_match_floor_formula(self, rng):
        for _ in range(25):
            ell = float(rng.uniform(0.3, 2.5))
            radius = float(rng.uniform(0.5, 9.0))
            if abs(radius / ell - round(radius / ell)) < 1e-6:
                continue
            g = GroupPresentation.cyclic(ell)
            ball = enumerate_ball(g, I_PT, radius, g.complete_word_length(radius))
            assert len(ball) == 2 * math.floor(radius / ell)

    def test_zero_radius(self):
        g = GroupPresentation.cyclic(1.0)
        assert len(enumerate_ball(g, I_PT, 0.0, 5)) == 0

    def test_off_axis_displacement_grows(self):
        g = GroupPresentation.cyclic(2.0)
        z = HPoint(0.9, 1.0)
        ball = enumerate_ball(g, z, 7.0, 10)
        assert all(e.displacement > 2.0 for e in ball if len(e.word) == 1)


class TestGamma2Enumeration:
    def test_small_radius_empty_vs_brute_force(self):
        g = GroupPresentation.gamma2()
        ball = enumerate_ball(g, I_PT, 0.5, 6)
        assert len(ball) == 0
        assert len(brute_force_ball(g, I_PT, 0.5, 6)) == 0

    def test_matches_brute_force_radius_four(self):
        g = GroupPresentation.gamma2()
        brute = brute_force_ball(g, I_PT, 4.0, 7)
        ball = enumerate_ball(g, I_PT, 4.0, 7)
        assert len(ball) == len(brute)
        assert {e.word for e in ball} == set(brute)

    def test_frontier_mode_matches_exact(self):
        g = GroupPresentation.gamma2()
        exact = enumerate_ball(g, I_PT, 6.0, 14)
        frontier = enumerate_ball(g, I_PT, 6.0, 40, frontier_slack=2.0)
        assert {e.word for e in exact} == {e.word for e in frontier}
        # doubling the slack finds nothing new
        wide = enumerate_ball(g, I_PT, 6.0, 60, frontier_slack=4.0)
        assert {e.word for e in wide} == {e.word for e in exact}

    def test_monotone_in_radius(self):
        g = GroupPresentation.gamma2()
        counts = [
            len(enumerate_ball(g, I_PT, r, 40, frontier_slack=2.0))
            for r in (2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
        ]
        assert counts == sorted(counts)

    def test_per_letter_growth_constant(self):
        # min displacement over reduced words of each length stays above
        # 0.25 per letter in the tested range
        g = GroupPresentation.gamma2()
        by_len = {}
        for word, d in brute_force_ball(g, I_PT, 25.0, 8).items():
            k = len(word)
            by_len[k] = min(by_len.get(k, math.inf), d)
        for k, dmin in by_len.items():
            assert dmin >= 0.25 * k

    def test_incomplete_flag(self):
        g = GroupPresentation.gamma2()
        ball = enumerate_ball(g, I_PT, 6.0, 5)
        assert ball.possibly_incomplete
        ball = enumerate_ball(g, I_PT, 6.0, g.complete_word_length(6.0))
        assert not ball.possibly_incomplete

    def test_budget_error(self):
        g = GroupPresentation.gamma2()
        with pytest.raises(BudgetExceededError):
            enumerate_ball(g, I_PT, 12.0, 40, budget=2000, frontier_slack=2.0)

    def test_dedup_for_redundant_custom_generators(self):
        a = MoebiusElement(1, 2, 0, 1)
        g = GroupPresentation.custom([a, a])  # same generator twice
        ball = enumerate_ball(g, HPoint(0.0, 0.5), 3.0, 3)
        entries = [
            tuple(round(v, 6) for v in e.element.entries()) for e in ball
        ]
        normalized = {min(t, tuple(-x for x in t)) for t in entries}
        assert len(normalized) == len(ball)


class TestCountingBound:
    def test_paper_value(self):
        assert counting_bound(2.0, 1.0) == pytest.approx(4 * math.e**3, rel=1e-14)

    def test_arithmetic(self):
        assert counting_bound(1.0, 2.0) == pytest.approx(math.e**2, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            counting_bound(1.0, 2.5)
        with pytest.raises(DomainError):
            counting_bound(0.0, 1.0)

    def test_never_violated_on_models(self):
        g2 = GroupPresentation.gamma2()
        sys2 = systole_estimate(g2, 8)
        r = min(2.0, sys2 / 2.0)
        ball = enumerate_ball(g2, I_PT, 8.0, 64, frontier_slack=2.5)
        disps = sorted(e.displacement for e in ball if e.klass == "hyperbolic")
        for j in np.arange(0.5, 8.01, 0.5):
            count = sum(1 for d in disps if d <= j)
            assert count <= counting_bound(float(j), r)


class TestSystole:
    def test_cyclic(self):
        assert systole_estimate(GroupPresentation.cyclic(2.0), 4) == 2.0
        assert systole_estimate(GroupPresentation.cyclic(0.1), 4) == pytest.approx(0.1)

    def test_gamma2(self):
        est = systole_estimate(GroupPresentation.gamma2(), 8)
        assert est == pytest.approx(2.0 * math.acosh(3.0), abs=1e-10)

    def test_no_hyperbolic_warns(self):
        g = GroupPresentation.gamma2()
        with pytest.warns(UserWarning):
            assert systole_estimate(g, 1) == math.inf


class TestDomainGrids:
    def test_gamma2_area_contract(self):
        g = GroupPresentation.gamma2()
        for cutoff in (10.0, 12.0):
            grid = build_domain_grid(g, 256, cusp_cutoff=cutoff)
            target = 2 * math.pi - 3.0 / cutoff
            assert grid.weights.min() > 0
            assert abs(grid.weights.sum() - target) <= 1e-3 * target

    def test_gamma2_spec_interval_at_y10(self):
        g = GroupPresentation.gamma2()
        total = sum(w for _, w in fundamental_domain_grid(g, 256, cusp_cutoff=10.0))
        assert 2 * math.pi * 0.95 <= total <= 2 * math.pi

    def test_cutoff_to_infinity_recovers_full_area(self):
        g = GroupPresentation.gamma2()
        prev = 0.0
        for cutoff in (10.0, 40.0, 160.0, 640.0):
            total = build_domain_grid(g, 64, cusp_cutoff=cutoff).weights.sum()
            assert total > prev
            prev = total
        assert prev == pytest.approx(2 * math.pi, rel=1e-3)

    def test_moment_integrals_against_adaptive_oracle(self):
        from scipy.integrate import quad

        from diractrace.groups import _gamma2_vmax, _gamma2_x_star

        g = GroupPresentation.gamma2()
        cutoff = 10.0
        y_cut = 2.0 * cutoff
        x_star = _gamma2_x_star(y_cut)
        grid = build_domain_grid(g, 128, cusp_cutoff=cutoff)
        for s in (2, 3):
            def column(x, s=s):
                vmax = _gamma2_vmax(x, y_cut)
                return (vmax ** (s + 1) - (1.0 / y_cut) ** (s + 1)) / (s + 1)

            parts = []
            for lo, hi in ((0.0, x_star), (x_star, 0.5), (0.5, 1.0 - x_star),
                           (1.0 - x_star, 1.0)):
                val, _ = quad(column, lo, hi, limit=400)
                parts.append(val)
            oracle = 2.0 * sum(parts)
            measured = float(np.sum(grid.weights * grid.points.imag ** (-float(s))))
            assert abs(measured - oracle) <= 5e-3 * abs(oracle)

    def test_cyclic_grid(self):
        g = GroupPresentation.cyclic(2.0)
        grid = build_domain_grid(g, 64)
        assert grid.weights.min() > 0
        c = 0.99
        area = 2.0 * 2.0 * c / math.sqrt(1 - c * c)
        assert grid.weights.sum() == pytest.approx(area, rel=1e-12)

    def test_rejects(self):
        with pytest.raises(DomainError):
            build_domain_grid(GroupPresentation.gamma2(), 4)
        with pytest.raises(ValidationError):
            build_domain_grid(
                GroupPresentation.custom([MoebiusElement(1, 2, 0, 1)]), 64
            )

    def test_mirror_symmetry(self):
        grid = build_domain_grid(GroupPresentation.gamma2(), 40, cusp_cutoff=12.0)
        pts = set(
            (round(z.real, 12), round(z.imag, 12), round(w, 14))
            for z, w in zip(grid.points, grid.weights)
        )
        for z, w in zip(grid.points, grid.weights):
            assert (round(-z.real, 12), round(z.imag, 12), round(w, 14)) in pts


class TestJson:
    def test_roundtrip_cyclic(self):
        g = GroupPresentation.cyclic(1.5)
        assert group_from_json(group_to_json(g)).ell == 1.5

    def test_gamma2(self):
        g = group_from_json({"model": "gamma2"})
        assert g.rank == 2

    def test_custom(self):
        doc = {"model": "custom", "generators": [[[1, 2], [0, 1]], [[1, 0], [2, 1]]]}
        g = group_from_json(doc)
        assert g.rank == 2
        assert group_to_json(g)["generators"][0] == [[1.0, 2.0], [0.0, 1.0]]

    def test_validation(self):
        with pytest.raises(ValidationError):
            group_from_json({"model": "nope"})
        with pytest.raises(ValidationError):
            group_from_json({"model": "cyclic"})
        with pytest.raises(ValidationError):
            group_from_json({"model": "custom"})


def test_elliptic_generator_rejected():
    with pytest.raises(ValidationError):
        GroupPresentation.custom([MoebiusElement(0, 1, -1, 0)])
