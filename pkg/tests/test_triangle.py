from fractions import Fraction

import numpy as np
import pytest

from chford.qi import QI, mat_identity, mat_mul, projective_deviation
from chford.triangle import (GroupElement, eval_word, essential_words, generators,
                             invert_word, solve_representation, star_words,
                             verify_relations)
from chford.bisectors import isometric_sphere


def test_generators_n4_exact_entries():
    b = generators(4)
    H = Fraction(1, 2)
    expect_B = ((QI(H, -1), QI(H, -H), QI(-Fraction(5, 2), -1)),
                (QI(-H, H), QI(-1, 1), QI(Fraction(3, 2), H)),
                (QI(-H), QI(-H, H), QI(H)))
    assert b.B.matrix == expect_B
    # A = I1 I2 is the Heisenberg translation by (-2, 0)
    expect_A = ((QI(1), QI(2), QI(-2)), (QI(0), QI(1), QI(-2)), (QI(0), QI(0), QI(1)))
    assert b.A.matrix == expect_A
    assert b.I3.matrix == mat_mul(b.I2.matrix, b.B.matrix)
    # B = I2 I3 exactly
    assert mat_mul(b.I2.matrix, b.I3.matrix) == b.B.matrix


def test_generators_n6_matches_quadratic_display():
    b = generators(6)
    s = 23 ** 0.5
    assert abs(b.I3.matrix[2][0] - 0.75) < 1e-15
    assert abs(b.I3.matrix[0][0] + 0.5) < 1e-15
    assert abs(b.I3.matrix[0][1] - (5 - s * 1j) / 12) < 1e-15


def test_generators_rejects_bad_n():
    with pytest.raises(ValueError):
        generators(5)


def test_verify_relations():
    for n in (4, 6):
        b = generators(n)
        report = verify_relations(b)
        failures = [r for r in report if not r[2]]
        assert failures == []
        tol = 0.0 if n == 4 else 1e-9
        for name, dev, ok in report:
            if "!=" not in name and "parabolic" not in name:
                assert dev <= max(tol, 1e-12), name
    # a perturbed B must show a violation at least as big as the perturbation
    b = generators(6)
    pert = tuple(tuple(x + (1e-4 if i == j == 1 else 0) for j, x in enumerate(row))
                 for i, row in enumerate(b.B.matrix))
    bad = type(b)(n=6, I1=b.I1, I2=b.I2, I3=b.I3, A=b.A,
                  B=GroupElement("B", pert), exact=False)
    report = verify_relations(bad)
    dev_b3 = [dev for name, dev, _ in report if name == "B^3 = id"][0]
    assert dev_b3 >= 1e-4


def test_eval_word():
    b = generators(4)
    assert eval_word(b, "").matrix == mat_identity(exact=True)
    assert projective_deviation(eval_word(b, "BBB").matrix, mat_identity()) == 0
    b6 = generators(6)
    assert projective_deviation(eval_word(b6, "BBB").matrix, mat_identity()) < 1e-12
    with pytest.raises(ValueError):
        eval_word(b, "Bx")
    # inverse word evaluates to the inverse element
    for w in star_words(4):
        m = eval_word(b, w).matrix
        mi = eval_word(b, invert_word(w)).matrix
        assert projective_deviation(mat_mul(m, mi), mat_identity()) == 0


def test_essential_words_n4():
    b = generators(4)
    ws = essential_words(b, 3)
    assert set(ws.words) == {"b", "B", "Bab", "BaB", "BAB", "bAB",
                             "BAb", "bAb", "bab", "baB"}
    assert [w for w in ws if len(w) == 2] == []
    ws4 = essential_words(b, 4)
    len4 = {w for w in ws4 if len(w) == 4}
    expect = {"Baab", "BaaB", "BAAB", "bAAB"}
    expect |= {invert_word(w) for w in expect}
    assert len4 == expect


def test_essential_words_n6():
    b = generators(6)
    ws = essential_words(b, 5)
    assert "BaBaB" in ws and "bAbAb" in ws
    assert set(star_words(6)) <= set(ws.words)
    for w in ws:
        assert invert_word(w) in ws


def test_word_alias_spheres_coincide():
    # words naming the same isometric sphere produce equal center and radius
    b = generators(4)
    for w1, w2 in (("bAb", "ABaBa"), ("bab", "aBABA")):
        s1 = isometric_sphere(eval_word(b, w1))
        s2 = isometric_sphere(eval_word(b, w2))
        assert s1.center.z == s2.center.z and s1.center.t == s2.center.t
        assert s1.radius4 == s2.radius4


def test_solver_recovers_bundles():
    r4 = solve_representation(4, seeds=25)
    b4 = generators(4)
    assert projective_deviation(r4.B.matrix, b4.B.matrix) < 1e-10
    assert projective_deviation(r4.I3.matrix, b4.I3.matrix) < 1e-10
    r6 = solve_representation(6, seeds=25)
    b6 = generators(6)
    assert projective_deviation(r6.I3.matrix, b6.I3.matrix) < 1e-9
    rep = verify_relations(r6)
    assert all(ok for _, _, ok in rep)
    # order is exactly six: smaller powers are not the identity
    p = eval_word(r6, "ABB").matrix
    acc = mat_identity(exact=False)
    for k in range(1, 6):
        acc = mat_mul(acc, p)
        assert projective_deviation(acc, mat_identity()) > 1e-6
