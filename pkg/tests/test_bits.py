from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefixlab.bits import (
    EMPTY,
    BitString,
    ClopenSet,
    DyadicRational,
    MalformedCodeword,
    OracleStream,
    TapeExhausted,
    elias_gamma,
    elias_gamma_decode,
    gamma_nat,
    gamma_nat_decode,
    rank_pair,
    string_from_rank,
    string_rank,
    unrank_pair,
)

bitstrings = st.integers(0, 10).flatmap(
    lambda n: st.integers(0, (1 << n) - 1).map(lambda v: BitString(n, v))
)


# -- BitString ----------------------------------------------------------


def test_bitstring_basics():
    s = BitString.from_text("0101")
    assert len(s) == 4 and s.text() == "0101"
    assert list(s.bits()) == [0, 1, 0, 1]
    assert s.prefix(2) == BitString.from_text("01")
    assert s.drop_prefix(1) == BitString.from_text("101")
    assert s.prefix(2).is_prefix_of(s)
    assert not s.is_prefix_of(s.prefix(2))
    assert EMPTY.is_prefix_of(s)
    assert s.child(1).text() == "01011"
    assert s.sibling().text() == "0100"
    assert (s + BitString.from_text("11")).text() == "010111"


def test_bitstring_rejects_bad_values():
    with pytest.raises(ValueError):
        BitString(2, 4)
    with pytest.raises(ValueError):
        BitString.from_text("012")


@given(bitstrings, bitstrings)
def test_prefix_order_is_partial_order(a, b):
    if a.is_prefix_of(b) and b.is_prefix_of(a):
        assert a == b
    if a.is_prefix_of(b):
        assert b.text().startswith(a.text())


@given(bitstrings)
def test_rank_roundtrip(s):
    assert string_from_rank(string_rank(s)) == s


def test_rank_examples():
    assert string_rank(EMPTY) == 0
    assert string_rank(BitString.from_text("1")) == 2
    assert rank_pair(EMPTY, 0) == 0
    assert rank_pair(BitString.from_text("1"), 0) == 3
    assert rank_pair(BitString.from_text("0"), 1) == 4


def test_pairing_bijective_first_100():
    seen = {}
    for m in range(100):
        s, k = unrank_pair(m)
        assert rank_pair(s, k) == m
        assert (s, k) not in seen
        seen[(s, k)] = m


# -- Elias gamma --------------------------------------------------------


@pytest.mark.parametrize("n,code", [(1, "1"), (2, "010"), (4, "00100"), (9, "0001001")])
def test_gamma_examples(n, code):
    assert elias_gamma(n).text() == code
    assert elias_gamma_decode(BitString.from_text(code)) == n


def test_gamma_lengths():
    for n in range(1, 200):
        assert len(elias_gamma(n)) == 2 * (n.bit_length() - 1) + 1


def test_gamma_rejects_incomplete():
    with pytest.raises(MalformedCodeword):
        elias_gamma_decode(BitString.from_text("00"))
    with pytest.raises(MalformedCodeword):
        elias_gamma_decode(BitString.from_text("0101"))  # trailing bit
    with pytest.raises(ValueError):
        elias_gamma(0)


def test_gamma_image_prefix_free_up_to_4096():
    codes = {elias_gamma(n): n for n in range(1, (1 << 12) + 1)}
    for code in codes:
        for k in range(code.n):
            assert code.prefix(k) not in codes


def test_gamma_nat_shift():
    assert gamma_nat(0).text() == "1"
    for n in range(0, 50):
        assert gamma_nat_decode(gamma_nat(n)) == n


# -- DyadicRational ------------------------------------------------------


def test_dyadic_canonical_form():
    assert DyadicRational(4, 2) == DyadicRational(1, 0)
    assert DyadicRational(0, 7) == DyadicRational(0, 0)
    assert DyadicRational(6, 1).num == 3 and DyadicRational(6, 1).exp == 0
    assert str(DyadicRational(3, 2)) == "3/2^2"
    assert DyadicRational.parse("3/2^2") == DyadicRational(3, 2)


def test_dyadic_pow2_both_signs():
    assert DyadicRational.pow2(3) == 8
    assert DyadicRational.pow2(-3).as_fraction() == Fraction(1, 8)


dyadics = st.tuples(st.integers(0, 1 << 20), st.integers(0, 24)).map(
    lambda t: DyadicRational(*t)
)


@given(dyadics, dyadics)
def test_dyadic_arithmetic_matches_fractions(a, b):
    assert (a + b).as_fraction() == a.as_fraction() + b.as_fraction()
    assert (a * b).as_fraction() == a.as_fraction() * b.as_fraction()
    assert (a < b) == (a.as_fraction() < b.as_fraction())
    assert (a <= b) == (a.as_fraction() <= b.as_fraction())
    if a >= b:
        assert (a - b).as_fraction() == a.as_fraction() - b.as_fraction()


@given(dyadics, st.integers(-10, 10))
def test_dyadic_shift(a, k):
    assert a.shift(k).as_fraction() == a.as_fraction() * Fraction(2) ** k


def test_dyadic_rejects_negative():
    with pytest.raises(ValueError):
        DyadicRational(3, 1) - DyadicRational(7, 1)


# -- ClopenSet -----------------------------------------------------------


def brute_force_measure(gens, depth):
    """Independent oracle: the fraction of depth-``depth`` strings with a
    generator prefix."""
    hits = 0
    for v in range(1 << depth):
        s = BitString(depth, v)
        if any(g.is_prefix_of(s) for g in gens):
            hits += 1
    return Fraction(hits, 1 << depth)


@pytest.mark.parametrize(
    "gens,expected",
    [
        (["0", "00"], ["0"]),
        (["0", "1"], [""]),
        (["01", "10", "11"], ["1", "01"]),
        ([], []),
    ],
)
def test_canonicalize_examples(gens, expected):
    c = ClopenSet(BitString.from_text(g) for g in gens)
    assert [g.text() for g in c.gens] == expected


@pytest.mark.parametrize(
    "gens,measure",
    [([], Fraction(0)), (["0", "10"], Fraction(3, 4)), ([""], Fraction(1))],
)
def test_measure_examples(gens, measure):
    c = ClopenSet(BitString.from_text(g) for g in gens)
    assert c.measure().as_fraction() == measure


gen_sets = st.lists(
    st.integers(0, 6).flatmap(
        lambda n: st.integers(0, (1 << n) - 1).map(lambda v: BitString(n, v))
    ),
    max_size=12,
)


@given(gen_sets)
def test_canonical_measure_matches_brute_force(gens):
    c = ClopenSet(gens)
    depth = max((g.n for g in gens), default=0)
    assert c.measure().as_fraction() == brute_force_measure(gens, depth)


@given(gen_sets)
def test_canonicalize_idempotent_and_order_independent(gens):
    c1 = ClopenSet(gens)
    c2 = ClopenSet(reversed(gens))
    assert c1 == c2
    assert ClopenSet(c1.gens) == c1


@given(gen_sets)
def test_indicator_and_back(gens):
    c = ClopenSet(gens)
    depth = max((g.n for g in gens), default=0)
    assert ClopenSet.from_indicator(c.indicator(depth)) == c


def test_complement_at_depth():
    c = ClopenSet([BitString.from_text("0")])
    comp = c.complement(3)
    assert comp == ClopenSet([BitString.from_text("1")])
    assert c.union(comp).measure() == 1
    assert c.intersection(comp).is_empty()


def test_intersection_union():
    a = ClopenSet([BitString.from_text("0")])
    b = ClopenSet([BitString.from_text("01"), BitString.from_text("11")])
    assert a.intersection(b) == ClopenSet([BitString.from_text("01")])
    assert a.union(b).measure().as_fraction() == Fraction(3, 4)


def test_serialization_roundtrip():
    c = ClopenSet([BitString.from_text("01"), BitString.from_text("1")])
    assert ClopenSet.deserialize(c.serialize()) == c
    assert ClopenSet.deserialize(ClopenSet([]).serialize()) == ClopenSet([])
    # The full space is one blank line (the empty generator).
    assert ClopenSet.deserialize(ClopenSet([EMPTY]).serialize()).measure() == 1


# -- OracleStream --------------------------------------------------------


def test_oracle_examples_via_tape():
    s = OracleStream.from_tape(BitString.from_text("0000"))
    assert s.draw(4) == 0
    s = OracleStream.from_tape(BitString.from_text("1010"))
    assert s.draw(4) == 10
    s = OracleStream.from_tape(BitString.from_text("0111"))
    assert s.draw(2) == 1 and s.draw(2) == 3


def test_oracle_deterministic_and_replayable():
    a = OracleStream(42)
    draws = [a.draw(w) for w in (1, 7, 64, 13, 130)]
    b = OracleStream(42)
    assert [b.draw(w) for w in (1, 7, 64, 13, 130)] == draws
    assert a.tape() == b.tape()
    r = OracleStream.from_tape(a.tape())
    assert [r.draw(w) for w in (1, 7, 64, 13, 130)] == draws
    with pytest.raises(TapeExhausted):
        r.draw(1)


def test_oracle_position_counts_bits():
    s = OracleStream(7)
    s.draw(5)
    s.draw(0)
    s.draw(9)
    assert s.position == 14
    assert len(s.tape()) == 14


def test_oracle_large_draw_matches_bitwise():
    a = OracleStream(9)
    big = a.draw(1000)
    b = OracleStream(9)
    acc = 0
    for _ in range(1000):
        acc = (acc << 1) | b.draw(1)
    assert big == acc
