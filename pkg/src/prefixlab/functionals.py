"""Bounded-use total functionals as complete decision tables.

A functional maps each oracle prefix of a declared use width to an output
per level: a finite set of level-length strings (set functionals) or a
natural number (integer functionals, used for thresholds and orders).
Totality at desk scale means every length-u prefix has an output, and the
output depends only on the declared prefix.

Exact preimage measures are computed by exhausting the 2^u prefixes; all
counts convert to dyadic rationals without rounding.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .bits import BitString, ClopenSet, DyadicRational, OracleStream

__all__ = [
    "TotalFunctional",
    "IntFunctional",
    "identity_prefix_functional",
    "constant_functional",
    "random_functional",
    "shatter_functional",
    "constant_int_functional",
    "random_int_functional",
    "int_functional_from_tables",
    "preimage_measure",
    "preimage_measure_naive",
]

OutputSet = frozenset  # of int string-values at a fixed level


class TotalFunctional:
    """Set-valued decision tables: level n maps each of the 2^use oracle
    prefixes to a subset of the n-bit strings.

    ``ids[n]`` assigns each prefix an output index; ``outputs[n]`` lists the
    distinct output sets (as frozensets of string values).
    """

    def __init__(self, use: int, ids: Sequence[np.ndarray], outputs: Sequence[list]):
        if len(ids) != len(outputs):
            raise ValueError("ids and outputs must cover the same levels")
        self.use = use
        self.ids = [np.asarray(a, dtype=np.int32) for a in ids]
        self.outputs = [list(o) for o in outputs]
        for n, a in enumerate(self.ids):
            if a.shape != (1 << use,):
                raise ValueError(f"level {n} table must cover all 2^use prefixes")
            if a.min(initial=0) < 0 or a.max(initial=0) >= len(self.outputs[n]):
                raise ValueError(f"level {n} table references a missing output")
            for s in self.outputs[n]:
                if any(v >> n for v in s):
                    raise ValueError(f"level {n} output holds a non level-n string")

    @property
    def levels(self) -> int:
        return len(self.ids) - 1

    def value(self, x: int, n: int) -> OutputSet:
        """Output on the oracle prefix with value ``x``; the generic
        (row-at-a-time) evaluation path."""
        return self.outputs[n][int(self.ids[n][x])]

    def value_strings(self, x: int, n: int) -> frozenset:
        return frozenset(BitString(n, v) for v in self.value(x, n))

    def member_matrix(self, n: int) -> np.ndarray:
        """Boolean (num_outputs, 2^n) table: does output i contain string v."""
        m = np.zeros((len(self.outputs[n]), 1 << n), dtype=bool)
        for i, s in enumerate(self.outputs[n]):
            for v in s:
                m[i, v] = True
        return m

    def widths(self, n: int) -> np.ndarray:
        return np.array([len(s) for s in self.outputs[n]], dtype=np.int64)


class IntFunctional:
    """Integer-valued decision tables: level n maps each prefix to a
    natural number (thresholds, oracle-computed orders)."""

    def __init__(self, use: int, tables: Sequence[np.ndarray]):
        self.use = use
        self.tables = [np.asarray(t, dtype=np.int64) for t in tables]
        for n, t in enumerate(self.tables):
            if t.shape != (1 << use,):
                raise ValueError(f"level {n} table must cover all 2^use prefixes")
            if t.min(initial=0) < 0:
                raise ValueError("integer functionals output naturals")

    @property
    def levels(self) -> int:
        return len(self.tables) - 1

    def value(self, x: int, n: int) -> int:
        return int(self.tables[n][x])


def identity_prefix_functional(use: int, levels: int) -> TotalFunctional:
    """Phi(x; n) = { x restricted to n }, the canonical width-1 functional."""
    size = 1 << use
    ids = []
    outputs = []
    for n in range(levels + 1):
        ids.append(np.arange(size, dtype=np.int32) >> (use - n))
        outputs.append([frozenset({v}) for v in range(1 << n)])
    return TotalFunctional(use, ids, outputs)


def constant_functional(
    use: int, sets_by_level: Sequence[Iterable[BitString]]
) -> TotalFunctional:
    """Phi(x; n) = a fixed string set, independent of the oracle."""
    size = 1 << use
    ids = []
    outputs = []
    for n, strings in enumerate(sets_by_level):
        vals = frozenset(s.v for s in strings)
        for s in strings:
            if s.n != n:
                raise ValueError(f"level {n} constant holds a length-{s.n} string")
        ids.append(np.zeros(size, dtype=np.int32))
        outputs.append([vals])
    return TotalFunctional(use, ids, outputs)


def random_functional(
    seed: int,
    use: int,
    levels: int,
    max_sets: int = 8,
    max_width: int = 4,
    allow_empty: bool = True,
) -> TotalFunctional:
    """A seeded random decision table: per level, a small pool of random
    output sets and a random prefix-to-set assignment.  Deterministic in
    the seed (drawn from the repo's fixed 64-bit stream)."""
    stream = OracleStream(seed)
    size = 1 << use
    ids = []
    outputs = []
    for n in range(levels + 1):
        pool_size = 1 + stream.draw(8) % max_sets
        pool = []
        for _ in range(pool_size):
            width = stream.draw(8) % (max_width + 1)
            if not allow_empty and width == 0:
                width = 1
            width = min(width, 1 << n)
            members = set()
            while len(members) < width:
                members.add(stream.draw(n) if n else 0)
            pool.append(frozenset(members))
        table = np.empty(size, dtype=np.int32)
        for x in range(size):
            table[x] = stream.draw(16) % pool_size
        ids.append(table)
        outputs.append(pool)
    return TotalFunctional(use, ids, outputs)


def shatter_functional(g_table: Sequence[int], use: int, levels: int) -> TotalFunctional:
    """Phi(x; n) = level n of the tree shattering the oracle prefix on the
    free positions induced by the order g (positions where g steps up)."""
    if levels > use:
        raise ValueError("levels beyond the declared use")
    free = [n for n in range(1, levels + 1) if g_table[n] > g_table[n - 1]]
    size = 1 << use
    ids = []
    outputs = []
    for n in range(levels + 1):
        free_n = [p for p in free if p <= n]
        fixed_n = [p for p in range(1, n + 1) if p not in free_n]
        # Output id = the fixed-position bit pattern of the oracle prefix.
        x = np.arange(size, dtype=np.int64)
        key = np.zeros(size, dtype=np.int64)
        for p in fixed_n:
            key = (key << 1) | ((x >> (use - p)) & 1)
        pool_index: dict[int, int] = {}
        pool: list[frozenset] = []
        table = np.empty(size, dtype=np.int32)
        for xv in range(size):
            k = int(key[xv])
            if k not in pool_index:
                members = []
                for combo in range(1 << len(free_n)):
                    v = 0
                    ci = 0
                    for p in range(1, n + 1):
                        if p in free_n:
                            bit = (combo >> (len(free_n) - 1 - ci)) & 1
                            ci += 1
                        else:
                            bit = (xv >> (use - p)) & 1
                        v = (v << 1) | bit
                    members.append(v)
                pool_index[k] = len(pool)
                pool.append(frozenset(members))
            table[xv] = pool_index[k]
        ids.append(table)
        outputs.append(pool)
    return TotalFunctional(use, ids, outputs)


def constant_int_functional(use: int, values: Sequence[int]) -> IntFunctional:
    size = 1 << use
    return IntFunctional(
        use, [np.full(size, v, dtype=np.int64) for v in values]
    )


def random_int_functional(
    seed: int, use: int, levels: int, max_value: int
) -> IntFunctional:
    stream = OracleStream(seed)
    size = 1 << use
    tables = []
    for _ in range(levels + 1):
        t = np.empty(size, dtype=np.int64)
        for x in range(size):
            t[x] = stream.draw(16) % (max_value + 1)
        tables.append(t)
    return IntFunctional(use, tables)


def int_functional_from_tables(use: int, tables: Sequence[np.ndarray]) -> IntFunctional:
    return IntFunctional(use, tables)


def preimage_measure(
    phi: TotalFunctional, predicate: Callable[[OutputSet, int], bool], n: int
) -> tuple[DyadicRational, ClopenSet]:
    """Exact measure and clopen set of the oracle prefixes whose level-n
    output satisfies the predicate.  The predicate is evaluated once per
    distinct output set; the mask over prefixes is exact."""
    if phi.use > 20:
        raise ValueError("use bound exceeded (limit 20)")
    good = np.array(
        [bool(predicate(s, n)) for s in phi.outputs[n]], dtype=bool
    )
    mask = good[phi.ids[n]]
    count = int(mask.sum())
    return DyadicRational(count, phi.use), ClopenSet.from_indicator(mask)


def preimage_measure_naive(
    phi: TotalFunctional, predicate: Callable[[OutputSet, int], bool], n: int
) -> DyadicRational:
    """Independent row-at-a-time evaluation, for regression checks."""
    count = 0
    for x in range(1 << phi.use):
        if predicate(phi.value(x, n), n):
            count += 1
    return DyadicRational(count, phi.use)
