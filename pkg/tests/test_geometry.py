import cmath
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from chford.geometry import (BoundaryPoint, HeisPoint, HoroPoint, PointAtInfinity,
                             Q_INF, SignClass, a_action, apply_to_boundary,
                             bergman_distance, box_product, classify_isometry,
                             classify_vector, complex_reflection, cygan_distance,
                             from_lift, heis_inverse, heis_mul, heis_norm,
                             heis_translation_matrix, hermitian_form,
                             polar_vector_of_ccircle, su21_deviation, to_lift)
from chford.qi import QI, mat_mul, mat_to_complex, mat_vec, projective_deviation, su21_inverse
from chford.triangle import generators, eval_word

RNG = random.Random(20240)


def rand_vec():
    return tuple(complex(RNG.uniform(-2, 2), RNG.uniform(-2, 2)) for _ in range(3))


def test_hermitian_form_basics():
    assert hermitian_form((1, 0, 0), (1, 0, 0)) == 0          # q_inf is null
    assert hermitian_form((0, 1, 0), (0, 1, 0)) == 1
    # conjugate symmetry on random vectors
    for _ in range(100):
        z, w = rand_vec(), rand_vec()
        assert abs(hermitian_form(z, w) - hermitian_form(w, z).conjugate()) < 1e-14


def test_hermitian_form_sample_point_value():
    # <X0, X0> = 9/4 - 3 sqrt(3)/2 for the chart sample point of the
    # I_B meet I_baB^1 torus (z1 = e^{-i pi/3}, z2 = 1 in affine coords)
    b4 = generators(4)
    p0 = tuple(complex(x) for x in Q_INF)
    q = mat_vec(eval_word(b4, "b").complex_matrix, p0)
    r = mat_vec(eval_word(b4, "AbAB").complex_matrix, p0)
    z1 = cmath.exp(-1j * math.pi / 3)
    x0 = box_product(tuple(z1.conjugate() * a - c for a, c in zip(p0, q)),
                     tuple(1 * a - c for a, c in zip(p0, r)))
    val = hermitian_form(x0, x0)
    assert abs(val - (9 / 4 - 3 * math.sqrt(3) / 2)) < 1e-12
    # components of the sample point (third is -i; the +i in the printed
    # display is inconsistent with the printed norm value)
    expect = (complex(5 / 4 + math.sqrt(3) / 4, -1 / 4 + math.sqrt(3) / 4),
              complex(-3 / 4 + math.sqrt(3) / 2, -1 / 2 + math.sqrt(3) / 4),
              -1j)
    assert max(abs(complex(a) - e) for a, e in zip(x0, expect)) < 1e-12


def test_classify_vector():
    assert classify_vector((1, 0, 0)) is SignClass.NULL
    assert classify_vector(to_lift(HoroPoint(0j, 0.0, 1.0))) is SignClass.NEGATIVE
    assert classify_vector((0, 1, 0)) is SignClass.POSITIVE
    with pytest.raises(ValueError):
        classify_vector((0, 0, 0))


def test_box_product():
    assert box_product((1, 0, 0), (0, 1, 0)) == (1, 0, 0)
    p = rand_vec()
    assert all(abs(c) == 0 for c in box_product(p, p))
    v = box_product((1, 2j, 3), (0, 1, -1))
    assert abs(hermitian_form(v, (1, 2j, 3))) < 1e-12
    for _ in range(100):
        p, q = rand_vec(), rand_vec()
        w = box_product(p, q)
        assert abs(hermitian_form(w, p)) < 1e-12
        assert abs(hermitian_form(w, q)) < 1e-12


def test_lifts():
    assert to_lift(HeisPoint(0j, 0.0)) == (0j, 0j, 1 + 0j)
    # center of S_b from the n=4 sphere table
    v = to_lift(HeisPoint(1 - 1j, 4.0))
    assert v == (-1 + 2j, 1 - 1j, 1 + 0j)
    for _ in range(100):
        h = HoroPoint(complex(RNG.uniform(-3, 3), RNG.uniform(-3, 3)),
                      RNG.uniform(-5, 5), RNG.uniform(0, 2))
        back = from_lift(to_lift(h))
        assert abs(back.z - h.z) < 1e-12 and abs(back.t - h.t) < 1e-12
        assert abs(back.u - h.u) < 1e-12
    with pytest.raises(PointAtInfinity):
        from_lift((1, 0, 0))


def test_lift_exact_mode():
    h = HeisPoint(QI(1, -1), Fraction(4))
    v = to_lift(h)
    assert v[0] == QI(-1, 2) and v[2] == QI(1)
    back = from_lift(v)
    assert back.z == QI(1, -1) and back.t == Fraction(4)


def test_heisenberg_group():
    z = HeisPoint(0j, 0.0)
    p = HeisPoint(1.5 - 0.5j, 2.0)
    assert heis_mul(z, p) == p
    got = heis_mul(HeisPoint(1 + 0j, 0.0), HeisPoint(1j, 0.0))
    assert got.z == 1 + 1j and got.t == -2.0   # 2 Im(1 * conj(i)) = -2
    q = heis_mul(p, heis_inverse(p))
    assert abs(q.z) < 1e-15 and abs(q.t) < 1e-15
    # exact associativity on Gaussian-rational points
    pts = [HeisPoint(QI(Fraction(1, 2), -2), Fraction(3)),
           HeisPoint(QI(-1, Fraction(1, 3)), Fraction(-2, 5)),
           HeisPoint(QI(2, 2), Fraction(7, 2))]
    a, b, c = pts
    lhs = heis_mul(heis_mul(a, b), c)
    rhs = heis_mul(a, heis_mul(b, c))
    assert lhs.z == rhs.z and lhs.t == rhs.t


def test_heis_translation_matrix():
    ident = heis_translation_matrix(HeisPoint(0j, 0.0))
    assert projective_deviation(ident, ((1, 0, 0), (0, 1, 0), (0, 0, 1))) < 1e-15
    # vertical translation moves the origin vertically
    m = heis_translation_matrix(HeisPoint(0j, 1.0))
    img = apply_to_boundary(m, HeisPoint(0j, 0.0))
    assert abs(img.z) < 1e-15 and abs(img.t - 1.0) < 1e-15
    m = heis_translation_matrix(HeisPoint(1 + 0j, 2.0))
    assert su21_deviation(m) < 1e-14
    img = apply_to_boundary(m, HeisPoint(0j, 0.0))
    assert abs(img.z - 1) < 1e-14 and abs(img.t - 2) < 1e-14
    cls = classify_isometry(m)
    assert cls.kind == "parabolic" and cls.unipotent


def test_cygan_metric():
    p = HoroPoint(0.3 + 0.1j, 1.0, 0.5)
    assert cygan_distance(p, p) == 0
    q = HeisPoint(1 - 2j, 3.0)
    d = cygan_distance(HeisPoint(0j, 0.0), q)
    assert abs(d - heis_norm(q)) < 1e-14
    # left invariance under 100 random Heisenberg translations
    for _ in range(100):
        g = HeisPoint(complex(RNG.uniform(-2, 2), RNG.uniform(-2, 2)), RNG.uniform(-3, 3))
        a = HeisPoint(complex(RNG.uniform(-2, 2), RNG.uniform(-2, 2)), RNG.uniform(-3, 3))
        b = HeisPoint(complex(RNG.uniform(-2, 2), RNG.uniform(-2, 2)), RNG.uniform(-3, 3))
        d0 = cygan_distance(a, b)
        d1 = cygan_distance(heis_mul(g, a), heis_mul(g, b))
        assert abs(d0 - d1) < 1e-12


def test_bergman_distance():
    p = HoroPoint(0.2 + 0.4j, -1.0, 1.3)
    assert bergman_distance(p, p) == 0
    with pytest.raises(BoundaryPoint):
        bergman_distance(p, HoroPoint(0j, 0.0, 0.0))
    b4 = generators(4)
    for word in ("A", "B"):
        g = eval_word(b4, word).complex_matrix
        for _ in range(20):
            p = HoroPoint(complex(RNG.uniform(-1, 1), RNG.uniform(-1, 1)),
                          RNG.uniform(-2, 2), RNG.uniform(0.2, 2))
            q = HoroPoint(complex(RNG.uniform(-1, 1), RNG.uniform(-1, 1)),
                          RNG.uniform(-2, 2), RNG.uniform(0.2, 2))
            gp = from_lift(mat_vec(tuple(map(tuple, g)), to_lift(p)))
            gq = from_lift(mat_vec(tuple(map(tuple, g)), to_lift(q)))
            assert abs(bergman_distance(p, q) - bergman_distance(gp, gq)) < 1e-12


def test_classify_isometry():
    b4 = generators(4)
    cls = classify_isometry(eval_word(b4, "A").matrix)
    assert cls.kind == "parabolic" and cls.unipotent
    cls = classify_isometry(eval_word(b4, "B").matrix)
    assert cls.kind == "elliptic" and cls.regular
    lox = ((2, 0, 0), (0, 1, 0), (0, 0, 0.5))
    assert classify_isometry(lox).kind == "loxodromic"
    with pytest.raises(ValueError):
        classify_isometry(((2, 0, 0), (0, 3, 0), (0, 0, 1)))
    # inverse has the same type
    for w in ("A", "B", "aB", "ab", "Bab"):
        m = eval_word(b4, w).matrix
        assert classify_isometry(m) == classify_isometry(su21_inverse(m))


def test_complex_reflection():
    m = complex_reflection((0, 1 + 0j, 0))
    assert projective_deviation(m, ((-1, 0, 0), (0, 1, 0), (0, 0, -1))) < 1e-15
    for _ in range(20):
        c = rand_vec()
        if classify_vector(c) is not SignClass.POSITIVE:
            continue
        if hermitian_form(c, c).real < 0.1:
            continue  # nearly null polar vectors are legitimately ill-conditioned
        r = complex_reflection(c)
        assert projective_deviation(mat_mul(r, r), ((1, 0, 0), (0, 1, 0), (0, 0, 1))) < 1e-10
        img = mat_vec(r, c)
        assert max(abs(x - y) for x, y in zip(img, c)) < 1e-9
    with pytest.raises(ValueError):
        complex_reflection((1, 0, 0))


def test_polar_vector_of_ccircle():
    v = polar_vector_of_ccircle(HeisPoint(0j, 0.0), 1.0)
    assert v == (0.5 + 0j, 0j, 1 + 0j)
    v = polar_vector_of_ccircle(HeisPoint(1 + 1j, 2.0), 1.0)
    assert abs(v[0] - complex(-0.5, 1.0)) < 1e-15 and v[1] == 1 + 1j
    with pytest.raises(ValueError):
        polar_vector_of_ccircle(HeisPoint(0j, 0.0), 0.0)
    for _ in range(100):
        c = HeisPoint(complex(RNG.uniform(-2, 2), RNG.uniform(-2, 2)), RNG.uniform(-3, 3))
        r = RNG.uniform(0.1, 3)
        assert classify_vector(polar_vector_of_ccircle(c, r)) is SignClass.POSITIVE


def test_a_action():
    assert a_action(HeisPoint(0j, 0.0)) == HeisPoint(-2 + 0j, 0.0)
    # matrix conjugation is the ground truth for the vertical part
    b4 = generators(4)
    am = eval_word(b4, "A").matrix
    for _ in range(100):
        p = HeisPoint(complex(RNG.uniform(-3, 3), RNG.uniform(-3, 3)), RNG.uniform(-5, 5))
        via_matrix = apply_to_boundary(am, p)
        via_action = a_action(p)
        assert abs(via_matrix.z - via_action.z) < 1e-12
        assert abs(via_matrix.t - via_action.t) < 1e-12
    # exact mode
    p = HeisPoint(QI(1, 1), Fraction(0))
    q = a_action(p, 1)
    assert q.z == QI(-1, 1) and q.t == 4


def test_su21_membership_of_generators():
    for n in (4, 6):
        b = generators(n)
        for g in (b.I1, b.I2, b.I3, b.A, b.B):
            assert su21_deviation(g.matrix) < 1e-12
