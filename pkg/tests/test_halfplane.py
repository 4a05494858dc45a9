import math

import numpy as np
import pytest

from diractrace.errors import DomainError
from diractrace.halfplane import (
    HPoint,
    IDENTITY,
    MoebiusElement,
    apply_moebius,
    area_of_signature,
    classify,
    compose,
    distance,
    parallel_transport,
    translation_length,
)

A = MoebiusElement(1, 2, 0, 1, word=(1,))
B = MoebiusElement(1, 0, 2, 1, word=(2,))
DIAG = MoebiusElement(2.0, 0.0, 0.0, 0.5)
I_PT = HPoint(0.0, 1.0)


def geodesic_length_oracle(z: HPoint, w: HPoint, n: int = 200000) -> float:
    """Arc length of the connecting geodesic by direct quadrature.

    The geodesic is a semicircle centered on the real axis (or a vertical
    segment); the hyperbolic length element is |dz| / y.
    """
    if abs(z.x - w.x) < 1e-15:
        return abs(math.log(w.y / z.y))
    c = (w.x * w.x + w.y * w.y - z.x * z.x - z.y * z.y) / (2.0 * (w.x - z.x))
    r = math.hypot(z.x - c, z.y)
    t0 = math.atan2(z.y, z.x - c)
    t1 = math.atan2(w.y, w.x - c)
    ts = np.linspace(t0, t1, n)
    ys = r * np.sin(ts)
    # |dz| = r dt on the circle
    return float(abs(np.trapezoid(r / ys, ts)))


class TestDistance:
    def test_coincident(self):
        assert distance(I_PT, I_PT) == 0.0

    def test_imaginary_axis(self):
        assert distance(I_PT, HPoint(0, 2)) == pytest.approx(math.log(2), abs=1e-15)

    def test_translated_point_against_geodesic_oracle(self):
        w = HPoint(1.0, 1.0)
        d = distance(I_PT, w)
        assert d == pytest.approx(math.acosh(1.5), abs=1e-14)
        assert d == pytest.approx(geodesic_length_oracle(I_PT, w), abs=1e-9)

    def test_symmetry_random(self, rng):
        for _ in range(10**4):
            z = HPoint(rng.uniform(-5, 5), rng.uniform(0.01, 5))
            w = HPoint(rng.uniform(-5, 5), rng.uniform(0.01, 5))
            assert abs(distance(z, w) - distance(w, z)) <= 1e-12

    def test_triangle_inequality(self, rng):
        for _ in range(2000):
            pts = [HPoint(rng.uniform(-3, 3), rng.uniform(0.05, 4)) for _ in range(3)]
            a = distance(pts[0], pts[1])
            b = distance(pts[1], pts[2])
            c = distance(pts[0], pts[2])
            assert c <= a + b + 1e-12


class TestCompose:
    def test_identity_neutral(self):
        m = compose(IDENTITY, A)
        assert m.entries() == A.entries()

    def test_product_example(self):
        m = compose(A, B)
        assert m.entries() == (5.0, 2.0, 2.0, 1.0)
        assert m.word == (1, 2)

    def test_inverse_roundtrip(self):
        m = compose(A, B)
        r = compose(m, m.inverse())
        assert r.is_identity(1e-12)

    def test_determinant_exact_on_integer_words(self, rng):
        letters = [A, B, A.inverse(), B.inverse()]
        m = IDENTITY
        for _ in range(40):
            m = compose(m, letters[rng.integers(4)])
            assert abs(m.det() - 1.0) <= 1e-12

    def test_determinant_drift_renormalized(self, rng):
        # noisy generators with bounded entries: renormalization keeps the
        # measured determinant at unit within rounding of the entries
        m = MoebiusElement(1.0, 0.3, 0.2, 1.06)
        g = MoebiusElement(1.9, 0.1, 0.3, 0.542 + 1e-5).renormalized()
        for k in range(10):
            m = compose(m, g if k % 2 == 0 else g.inverse())
            assert abs(m.det() - 1.0) <= 1e-12


class TestApply:
    def test_identity(self):
        z = apply_moebius(IDENTITY, I_PT)
        assert (z.x, z.y) == (0.0, 1.0)

    def test_translation(self):
        z = apply_moebius(A, I_PT)
        assert (z.x, z.y) == pytest.approx((2.0, 1.0), abs=1e-15)

    def test_dilation(self):
        z = apply_moebius(DIAG, I_PT)
        assert (z.x, z.y) == pytest.approx((0.0, 4.0), abs=1e-15)

    def test_isometry_random(self, rng):
        gens = [A, B, A.inverse(), B.inverse(), DIAG]
        for _ in range(2000):
            m = gens[rng.integers(len(gens))]
            for _ in range(rng.integers(1, 4)):
                m = compose(m, gens[rng.integers(len(gens))])
            z = HPoint(rng.uniform(-3, 3), rng.uniform(0.05, 4))
            w = HPoint(rng.uniform(-3, 3), rng.uniform(0.05, 4))
            d0 = distance(z, w)
            d1 = distance(apply_moebius(m, z), apply_moebius(m, w))
            assert abs(d0 - d1) <= 1e-10 * max(1.0, d0)


class TestClassify:
    def test_parabolic(self):
        assert classify(A) == "parabolic"

    def test_hyperbolic_with_translation_length(self):
        assert classify(DIAG) == "hyperbolic"
        assert translation_length(DIAG) == pytest.approx(2 * math.log(2), abs=1e-14)

    def test_elliptic(self):
        assert classify(MoebiusElement(0, 1, -1, 0)) == "elliptic"

    def test_identity_both_signs(self):
        assert classify(IDENTITY) == "identity"
        assert classify(IDENTITY.neg()) == "identity"

    def test_sign_invariance_and_conjugation(self, rng):
        elts = [A, B, DIAG, compose(A, B), compose(B, A.inverse())]
        conjugators = [A, B, DIAG, compose(A, B)]
        for m in elts:
            kind = classify(m)
            assert classify(m.neg()) == kind
            for s in conjugators:
                c = compose(compose(s, m), s.inverse())
                assert classify(c) == kind

    def test_translation_length_is_axis_minimum(self):
        # on the axis of diag(e^{l/2}, e^{-l/2}) the displacement equals l;
        # off axis it is strictly larger
        ln = translation_length(DIAG)
        on_axis = distance(I_PT, apply_moebius(DIAG, I_PT))
        assert on_axis == pytest.approx(ln, abs=1e-12)
        off = HPoint(0.7, 1.0)
        assert distance(off, apply_moebius(DIAG, off)) > ln
        probes = [HPoint(0.0, y) for y in np.geomspace(0.1, 10, 41)]
        best = min(distance(z, apply_moebius(DIAG, z)) for z in probes)
        assert best == pytest.approx(ln, abs=1e-8)


class TestParallelTransport:
    def test_same_point(self):
        assert parallel_transport(I_PT, I_PT) == pytest.approx(1.0 + 0j, abs=1e-15)

    def test_vertical(self):
        assert parallel_transport(I_PT, HPoint(0, 2)) == pytest.approx(1.0 + 0j, abs=1e-15)

    def test_offset_example(self):
        tau = parallel_transport(I_PT, HPoint(1, 1))
        expected = complex(2, 1) / math.sqrt(5)
        assert tau == pytest.approx(expected, abs=1e-14)
        assert abs(abs(tau) - 1.0) <= 1e-15

    def test_unit_modulus_everywhere(self, rng):
        for _ in range(10**4):
            z = HPoint(rng.uniform(-10, 10), rng.uniform(1e-3, 10))
            w = HPoint(rng.uniform(-10, 10), rng.uniform(1e-3, 10))
            assert abs(abs(parallel_transport(z, w)) - 1.0) <= 1e-12


class TestArea:
    def test_genus_two(self):
        assert area_of_signature(2, 0) == pytest.approx(4 * math.pi, rel=1e-15)

    def test_three_cusped_sphere(self):
        assert area_of_signature(0, 3) == pytest.approx(2 * math.pi, rel=1e-15)

    def test_one_one(self):
        assert area_of_signature(1, 1) == pytest.approx(2 * math.pi, rel=1e-15)

    def test_rejects_bad_signature(self):
        with pytest.raises(DomainError):
            area_of_signature(0, 2)
        with pytest.raises(DomainError):
            area_of_signature(-1, 5)


def test_hpoint_rejects_lower_halfplane():
    with pytest.raises(DomainError):
        HPoint(0.0, 0.0)
    with pytest.raises(DomainError):
        HPoint(0.0, -1.0)
