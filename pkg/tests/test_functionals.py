import numpy as np
import pytest

from prefixlab.bits import BitString, DyadicRational
from prefixlab.functionals import (
    constant_functional,
    constant_int_functional,
    identity_prefix_functional,
    preimage_measure,
    preimage_measure_naive,
    random_functional,
    random_int_functional,
    shatter_functional,
)


def test_identity_prefix_functional():
    phi = identity_prefix_functional(use=6, levels=4)
    assert phi.value(0b101010, 3) == frozenset({0b101})
    assert phi.value_strings(0b101010, 2) == {BitString.from_text("10")}


def test_totality_and_monotone_consistency():
    phi = random_functional(seed=5, use=6, levels=4)
    for n in range(phi.levels + 1):
        assert phi.ids[n].shape == (64,)
        for s in phi.outputs[n]:
            assert all(v < (1 << n) for v in s)


def test_preimage_measure_identity_always_true():
    phi = identity_prefix_functional(use=8, levels=5)
    measure, clopen = preimage_measure(phi, lambda s, n: True, 4)
    assert measure == 1 and clopen.measure() == 1


def test_preimage_measure_singleton_cylinder():
    phi = identity_prefix_functional(use=8, levels=5)
    sigma = BitString.from_text("0110")
    measure, clopen = preimage_measure(
        phi, lambda s, n: sigma.v in s, sigma.n
    )
    assert measure == DyadicRational.pow2(-sigma.n)
    assert clopen.gens == (sigma,)


def test_preimage_measure_constant_false():
    phi = constant_functional(4, [[BitString(0, 0)], [BitString(1, 1)]])
    measure, clopen = preimage_measure(phi, lambda s, n: not s, 1)
    assert measure == 0 and clopen.is_empty()


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_preimage_measure_matches_naive(seed):
    phi = random_functional(seed=seed, use=7, levels=5)
    preds = [
        lambda s, n: len(s) >= 2,
        lambda s, n: not s,
        lambda s, n: 0 in s,
    ]
    for n in (0, 2, 5):
        for pred in preds:
            fast, clopen = preimage_measure(phi, pred, n)
            assert fast == preimage_measure_naive(phi, pred, n)
            assert clopen.measure() == fast


def test_shatter_functional_widths():
    g = [0, 1, 1, 2]
    phi = shatter_functional(g, use=6, levels=3)
    for x in range(64):
        for n in range(4):
            out = phi.value(x, n)
            assert len(out) == 1 << g[n]
            # The oracle's own prefix is always in its shattered level.
            assert (x >> (6 - n)) in out


def test_int_functionals():
    th = constant_int_functional(5, [3, 1, 4])
    assert th.value(17, 2) == 4
    rnd = random_int_functional(seed=9, use=5, levels=3, max_value=3)
    assert rnd.tables[2].max() <= 3
    assert rnd.tables[0].min() >= 0
    again = random_int_functional(seed=9, use=5, levels=3, max_value=3)
    assert all((a == b).all() for a, b in zip(rnd.tables, again.tables))
