from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefixlab.bits import EMPTY, BitString, OracleStream
from prefixlab.kcl import KCLAllocator, KCLOverflow


def check_invariants(alloc):
    # Conservation of code space, exact.
    assert (alloc.spent + alloc.free_capacity()) == 1
    # Issued codewords prefix-free (the codebook enforces it; re-check).
    words = list(alloc.issued.entries)
    for i, a in enumerate(words):
        for b in words[i + 1 :]:
            assert not a.is_prefix_of(b) and not b.is_prefix_of(a)
    # Free nodes form an antichain disjoint from issued subtrees.
    nodes = alloc.free_nodes()
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            assert not a.is_prefix_of(b) and not b.is_prefix_of(a)
    for node in nodes:
        for w in words:
            assert not w.is_prefix_of(node) and not node.is_prefix_of(w)


def test_leftmost_policy_examples():
    a = KCLAllocator()
    assert [a.request(l, EMPTY).text() for l in (1, 2, 3)] == ["0", "10", "110"]
    assert a.weight().as_fraction() == Fraction(7, 8)
    assert a.request(3, EMPTY).text() == "111"
    assert a.weight() == 1
    with pytest.raises(KCLOverflow):
        a.request(1, EMPTY)
    assert a.weight() == 1  # state unchanged on overflow
    check_invariants(a)


def test_shallow_node_preferred_over_split_remainder():
    a = KCLAllocator()
    assert a.request(2, EMPTY).text() == "00"
    assert a.request(1, EMPTY).text() == "1"
    check_invariants(a)


def test_length_zero_once_on_fresh():
    a = KCLAllocator()
    assert a.request(0, EMPTY) == EMPTY
    assert a.weight() == 1
    with pytest.raises(KCLOverflow):
        a.request(5, EMPTY)
    b = KCLAllocator()
    b.request(3, EMPTY)
    with pytest.raises(KCLOverflow):
        b.request(0, EMPTY)


def test_determinism():
    lengths = [3, 1, 4, 4, 3]
    runs = []
    for _ in range(2):
        a = KCLAllocator()
        runs.append([a.request(l, EMPTY).text() for l in lengths])
    assert runs[0] == runs[1]


def test_weight_equals_recomputed_sum():
    a = KCLAllocator()
    lengths = [2, 3, 3, 4, 4]
    for l in lengths:
        a.request(l, BitString(3, l % 8))
    total = sum(Fraction(1, 1 << cw.n) for cw in a.issued.entries)
    assert a.weight().as_fraction() == total == sum(Fraction(1, 1 << l) for l in lengths)
    check_invariants(a)


@given(st.lists(st.integers(0, 12), max_size=40), st.integers(0, 2**32))
@settings(max_examples=200, deadline=None)
def test_fuzz_requests_within_budget_always_succeed(lengths, seed):
    budget = Fraction(0)
    accepted = []
    for l in lengths:
        if budget + Fraction(1, 1 << l) <= 1:
            budget += Fraction(1, 1 << l)
            accepted.append(l)
    a = KCLAllocator()
    for l in accepted:
        a.request(l, EMPTY)
    assert a.weight().as_fraction() == budget
    check_invariants(a)


def test_overflow_exactly_when_over_budget():
    a = KCLAllocator()
    stream = OracleStream(5)
    budget = Fraction(0)
    for _ in range(200):
        l = stream.draw(3) + 1
        if budget + Fraction(1, 1 << l) <= 1:
            a.request(l, EMPTY)
            budget += Fraction(1, 1 << l)
        else:
            with pytest.raises(KCLOverflow):
                a.request(l, EMPTY)
    check_invariants(a)
