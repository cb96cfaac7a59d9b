import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lamelab import bgg
from lamelab import glc
from lamelab.bgg import RingElement, SymWeight, simple, verma

H = Fraction(1, 2)
g = SymWeight.generic("g")
h = SymWeight.generic("h")


def M(w, order=6, k=0):
    return RingElement.of(verma(w), order, k)


def Ls(w, order=6, k=0):
    return RingElement.of(simple(w), order, k)


def test_decompose_examples():
    assert bgg.decompose_verma(H) == Ls(H) + M(Fraction(-3, 2), k=2)
    assert bgg.decompose_verma(0) == Ls(0) + M(-1, k=1)


@pytest.mark.parametrize("w", [0, H, 1, Fraction(5, 2), 3])
def test_decompose_preserves_character(w):
    assert bgg.character(bgg.decompose_verma(w, 8)) == bgg.character(M(w, 8))


def test_verma_tensor_rule():
    out = bgg.tensor(RingElement.of(bgg.verma(g), 3), RingElement.of(bgg.verma(h), 3), 3)
    want = RingElement({(k, bgg.verma(g + h - k)): 1 for k in range(4)}, 3)
    assert out == want


def test_two_halves():
    out = bgg.tensor(Ls(H), Ls(H), 6)
    assert out == Ls(1) + Ls(0, k=1)


def _pool():
    halves = [Fraction(j, 2) for j in range(5)]
    cls = [verma(w) for w in halves] + [simple(w) for w in halves]
    cls += [bgg.verma(g), bgg.verma(h), bgg.verma(g + H), bgg.verma(-g + 1), verma(Fraction(-3, 2))]
    return cls


classes = st.sampled_from(_pool())
small = st.builds(lambda a, b, k: RingElement.of(a, 6) + RingElement.of(b, 6, k), classes, classes,
                  st.integers(0, 3))


@given(small, small, small)
def test_associative(a, b, c):
    assert bgg.tensor(bgg.tensor(a, b, 6), c, 6) == bgg.tensor(a, bgg.tensor(b, c, 6), 6)


@given(small, small)
def test_commutative(a, b):
    assert bgg.tensor(a, b, 6) == bgg.tensor(b, a, 6)


@given(small, small)
def test_characters_multiply(a, b):
    prod = bgg.tensor(a, b, 6)
    assert bgg.character(prod) == bgg.character_product(bgg.character(a), bgg.character(b), 6)


@given(small)
def test_normal_form_idempotent(a):
    once = bgg.normal_form(a)
    assert once.is_normal
    assert bgg.normal_form(once) == once
    assert bgg.character(once) == bgg.character(a)


def test_normal_form_examples():
    assert bgg.normal_form(M(H)) == Ls(H) + M(Fraction(-3, 2), k=2)
    e = Ls(1) + M(g, k=2)
    assert bgg.normal_form(e) == e


def test_ck_examples():
    assert bgg.c_coefficients([g, h, -g - h + 5]) == [1, 2, 3, 4, 5]
    assert bgg.generating_series(["1/2", "1/2"], 5) == [1, 1, -1, -1, 0, 0]
    assert bgg.c_coefficients(["1/2", "1/2"]) == [1]
    with pytest.raises(ValueError):
        bgg.c_coefficients(["1/2", "1/2"], kmax=2)
    with pytest.raises(ValueError):
        bgg.c_coefficients(["1/2", "1"])


def test_ck_matches_tensor_oracle():
    pool = [Fraction(j, 2) for j in range(1, 13)]
    seen = 0
    for r in range(1, 5):
        for ws in itertools.combinations_with_replacement(pool, r):
            if sum(ws) > 6 or sum(ws).denominator != 1:
                continue
            assert bgg.c_coefficients(list(ws)) == bgg.c_coefficients_by_tensor(list(ws))
            seen += 1
    assert seen > 50
    for ws in ([g, -g + 2], [H, g, -g + Fraction(3, 2)], [g, h, -g - h + 4]):
        assert bgg.c_coefficients(ws) == bgg.c_coefficients_by_tensor(ws)


def test_predict_strata_cases():
    assert bgg.collision_case(Fraction(3, 2), g) == 1
    assert bgg.strata_index_set(Fraction(3, 2), g, order=8) == {0, 1, 2, 3}
    assert bgg.collision_case(Fraction(3, 2), H) == 4
    assert bgg.strata_index_set(Fraction(3, 2), H, order=8) == {0, 1}
    assert bgg.strata_index_set(1, 2, order=8) == {0, 1, 2}
    assert bgg.collision_case(g, h) == 0
    assert bgg.strata_index_set(g, h, order=5) == set(range(6))
    assert bgg.collision_case(g + H, -g + 1) == 2
    assert bgg.strata_index_set(g + H, -g + 1, order=8) == set(range(9))


def test_case_three_index_set():
    n2 = Fraction(-1, 2)
    assert bgg.collision_case(Fraction(3, 2), n2) == 3
    s = Fraction(3, 2) + n2
    want = set(range(0, 4)) | set(range(int(s + 2), int(2 * s + 1) + 1))
    assert bgg.strata_index_set(Fraction(3, 2), n2, order=8) == {k for k in want if k <= 8}


def test_strata_agree_with_degeneration(L):
    P = glc.PoleConfig([0.9 + 0.2j, 0.37 + 0.21j], L)
    for n in (["1/2", "3/2"], ["1", "1"]):
        rep = glc.trace_degeneration(n, P, 0.23 + 0.31j)
        total = sum(Fraction(w) for w in n)
        predicted = {k for k in bgg.strata_index_set(Fraction(n[0]), Fraction(n[1])) if k < total}
        assert set(rep.strata) == predicted
