"""The explicit object constructions: seeded fat sets, the perfect-tree
sampler with its two growth conditions, shattered trees from orders, the
weighted-pair machinery, and positive trees carved out of a pair set.

Every construction is a deterministic function of (seed, parameters);
replaying a run from its oracle tape reproduces it bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .bits import (
    BitString,
    ClopenSet,
    DYADIC_ZERO,
    DyadicRational,
    EMPTY,
    OracleStream,
    rank_pair,
    unrank_pair,
)
from .machine import ReferenceMachine, literal_cost
from .trees import PrunedTree, Tree, TreeError

__all__ = [
    "p_fat",
    "FatSetState",
    "fat_set_step",
    "fat_set_run",
    "derive_substream_seed",
    "FatFunctional",
    "fat_solovay_component",
    "TreeSamplerState",
    "new_sampler",
    "sample_perfect_tree_step",
    "sample_perfect_tree",
    "tree_condition_check",
    "ShatterSpec",
    "shattered_tree",
    "deficiency_transfer_check",
    "WeightedPairSet",
    "wgt",
    "d_set_enumerate",
    "positive_tree",
]

FAT_N_MIN = 2
FAT_N_MAX = 14


def p_fat(n: int) -> int:
    """Per-level pick count ceil(2^n / n^2); the ceiling keeps the fatness
    lower bound while making the count an integer."""
    return ((1 << n) + n * n - 1) // (n * n)


def derive_substream_seed(seed: int, index: int) -> int:
    """Seed of the index-th substream: the (index+1)-th output of the
    main SplitMix64 stream.  Deterministic; lets independent construction
    steps consume independent tapes."""
    s = OracleStream(seed)
    for _ in range(index + 1):
        word = s.draw(64)
    return word


@dataclass
class FatSetState:
    """Per n: the drawn level length and the set of picked strings."""

    lengths: dict[int, int] = field(default_factory=dict)
    sets: dict[int, tuple[BitString, ...]] = field(default_factory=dict)

    def level_sets_by_length(self) -> dict[int, set[BitString]]:
        return {l: set(self.sets[n]) for n, l in self.lengths.items()}


def fat_set_step(stream: OracleStream, n: int) -> tuple[int, tuple[BitString, ...]]:
    """One construction step: draw the level length from [2^n, 2^(n+1)),
    then pick ceil(2^n/n^2) distinct strings of that length, re-drawing on
    duplicates (sampling without replacement)."""
    if not FAT_N_MIN <= n <= FAT_N_MAX:
        raise ValueError(f"fat-set step needs {FAT_N_MIN} <= n <= {FAT_N_MAX}")
    length = (1 << n) + stream.draw(n)
    picks: list[BitString] = []
    taken: set[int] = set()
    for _ in range(p_fat(n)):
        v = stream.draw(length)
        while v in taken:
            v = stream.draw(length)
        taken.add(v)
        picks.append(BitString(length, v))
    return length, tuple(picks)


def fat_set_run(seed: int, n_max: int, n_min: int = FAT_N_MIN) -> FatSetState:
    """Run the construction for n_min..n_max on per-n substreams (see
    derive_substream_seed), so the steps are independently replayable."""
    state = FatSetState()
    for n in range(n_min, n_max + 1):
        stream = OracleStream(derive_substream_seed(seed, n))
        length, picks = fat_set_step(stream, n)
        state.lengths[n] = length
        state.sets[n] = picks
    return state


class FatFunctional:
    """Total decision-table form of one fat-set step.

    Reads ``wbits`` bits for the length draw (the length is 2^n plus the
    draw scaled up to the full window), then one block per pick.  Duplicate
    blocks are resolved by upward linear probing, which keeps the table
    total at a fixed use bound.  Within the use guard (<= 20 bits) the pick
    count is always 1, so probing never actually fires there.
    """

    def __init__(self, n: int, wbits: Optional[int] = None):
        if not FAT_N_MIN <= n <= FAT_N_MAX:
            raise ValueError("parameter n out of range")
        self.n = n
        self.wbits = n if wbits is None else wbits
        if not 0 <= self.wbits <= n:
            raise ValueError("window bits must lie in [0, n]")
        self.picks = p_fat(n)
        self.max_length = (1 << n) + (((1 << self.wbits) - 1) << (n - self.wbits))
        self.use = self.wbits + self.picks * self.max_length

    def length_for(self, draw: int) -> int:
        return (1 << self.n) + (draw << (self.n - self.wbits))

    def value(self, x: int, n: int) -> tuple[int, tuple[BitString, ...]]:
        """Evaluate the table row ``x`` (an oracle prefix of ``use`` bits)."""
        if n != self.n:
            raise ValueError("single-parameter table")
        draw = x >> (self.use - self.wbits) if self.wbits else 0
        length = self.length_for(draw)
        picks = []
        taken = set()
        for j in range(self.picks):
            lo = self.use - self.wbits - (j + 1) * self.max_length
            v = (x >> lo) & ((1 << self.max_length) - 1)
            v >>= self.max_length - length
            while v in taken:
                v = (v + 1) % (1 << length)
            taken.add(v)
            picks.append(BitString(length, v))
        return length, tuple(picks)


def fat_solovay_component(
    ff: FatFunctional, machine: ReferenceMachine, exhaustive: bool = False
) -> tuple[ClopenSet, DyadicRational]:
    """The bad-event clopen set of one fat-set step: oracle prefixes whose
    drawn length is compressible below n, or where some picked string is
    compressible below its length.  Exact measure reported.

    The structured path walks only the potentially-bad cylinders (a string
    can only be compressible via a registered codebook entry, never via the
    literal branch); the exhaustive path enumerates all 2^use rows.
    """
    n = ff.n
    if exhaustive:
        if ff.use > 20:
            raise ValueError("use bound exceeded (limit 20)")
        import numpy as np

        mask = np.zeros(1 << ff.use, dtype=bool)
        for x in range(1 << ff.use):
            length, picks = ff.value(x, n)
            mask[x] = machine.k_hat_nat(length) < n or any(
                machine.k_hat(s) < s.n for s in picks
            )
        clopen = ClopenSet.from_indicator(mask)
        return clopen, DyadicRational(int(mask.sum()), ff.use)
    if ff.picks != 1:
        raise ValueError("structured path requires a single pick per level")
    gens: list[BitString] = []
    for draw in range(1 << ff.wbits):
        prefix = BitString(ff.wbits, draw)
        length = ff.length_for(draw)
        if machine.k_hat_nat(length) < n:
            gens.append(prefix)
            continue
        for out, cost in machine.registered_best().items():
            if out.n == length and cost < length:
                gens.append(prefix.concat(out))
    clopen = ClopenSet(gens)
    return clopen, clopen.measure()


@dataclass
class TreeSamplerState:
    """Nondecreasing level lengths and the grown string sets, plus the raw
    draws so the clamp rule stays auditable."""

    schedule: Callable[[int], int]
    lengths: list[int] = field(default_factory=lambda: [0])
    level_sets: list[tuple[BitString, ...]] = field(default_factory=lambda: [(EMPTY,)])
    raw_draws: list[Optional[int]] = field(default_factory=lambda: [None])

    @property
    def steps(self) -> int:
        return len(self.lengths) - 1


def new_sampler(schedule: Callable[[int], int] = lambda n: n * n) -> TreeSamplerState:
    return TreeSamplerState(schedule=schedule)


MAX_SAMPLER_LENGTH = 1 << 20


def sample_perfect_tree_step(
    state: TreeSamplerState, stream: OracleStream, n: int
) -> TreeSamplerState:
    """Draw the next level length from [0, 2^q(n)); lengths that do not
    grow are clamped to the previous one with the set carried over,
    otherwise every string gets two distinct random extensions."""
    if n != state.steps + 1:
        raise ValueError(f"next step is {state.steps + 1}, got {n}")
    q = state.schedule(n)
    if (1 << q) > MAX_SAMPLER_LENGTH:
        raise ValueError("schedule exceeds the sampler bit budget")
    raw = stream.draw(q)
    prev_len = state.lengths[-1]
    prev = state.level_sets[-1]
    if raw <= prev_len:
        state.lengths.append(prev_len)
        state.level_sets.append(prev)
        state.raw_draws.append(raw)
        return state
    grow = raw - prev_len
    nxt: list[BitString] = []
    for tau in prev:
        first = stream.draw(grow)
        second = stream.draw(grow)
        while second == first:
            second = stream.draw(grow)
        nxt.append(tau.concat(BitString(grow, first)))
        nxt.append(tau.concat(BitString(grow, second)))
    state.lengths.append(raw)
    state.level_sets.append(tuple(nxt))
    state.raw_draws.append(raw)
    return state


def sample_perfect_tree(
    seed: int, n_max: int, schedule: Callable[[int], int] = lambda n: n * n
) -> TreeSamplerState:
    state = new_sampler(schedule)
    stream = OracleStream(seed)
    for n in range(1, n_max + 1):
        sample_perfect_tree_step(state, stream, n)
    return state


def tree_condition_check(
    state: TreeSamplerState, n: int, b: int, machine: ReferenceMachine
) -> tuple[bool, bool]:
    """The sampler's two bad-event conditions at step n, with the machine's
    exact costs in place of the ideal ones.

    (a) the level did not grow, or the growth increment is describable in
        at most n^2 - n/3 bits;
    (b) some grown string is conditionally describable from its parent in
        at most growth + n^2 - 5n/3 + b bits.

    Thresholds are compared as exact rationals.
    """
    if not 1 <= n <= state.steps:
        raise ValueError(f"step {n} not yet sampled")
    cur_len, prev_len = state.lengths[n], state.lengths[n - 1]
    grow = cur_len - prev_len
    a_holds = grow == 0 or Fraction(machine.k_hat_nat(grow)) <= (
        Fraction(n * n) - Fraction(n, 3)
    )
    thr_b = Fraction(grow) + Fraction(n * n) - Fraction(5 * n, 3) + Fraction(b)
    b_holds = False
    prev_set = state.level_sets[n - 1]
    for sigma in state.level_sets[n]:
        for tau in prev_set:
            if tau.is_prefix_of(sigma):
                cost = machine.k_hat_cond(sigma, tau)
                if cost is not None and Fraction(cost) <= thr_b:
                    b_holds = True
                    break
        if b_holds:
            break
    return a_holds, b_holds


@dataclass
class ShatterSpec:
    """Derived data of a shattering order: the first level where the order
    reaches each value, and the induced free-position set."""

    g: tuple[int, ...]
    first_reach: tuple[int, ...]  # f(i) = least level with g >= i, i >= 1
    free_positions: tuple[int, ...]

    @classmethod
    def from_order(cls, g: Sequence[int]) -> "ShatterSpec":
        if not g or g[0] != 0:
            raise TreeError("shattering order must start at 0")
        for i in range(len(g) - 1):
            if not g[i] <= g[i + 1] <= g[i] + 1:
                raise TreeError("order must be nondecreasing with steps <= 1")
        first = tuple(
            next(l for l in range(len(g)) if g[l] >= i) for i in range(1, g[-1] + 1)
        )
        free = tuple(n for n in range(1, len(g)) if g[n] > g[n - 1])
        return cls(tuple(g), first, free)


def shattered_tree(x: BitString, g: Sequence[int], depth: int) -> PrunedTree:
    """The tree of strings agreeing with the base string on every position
    outside the order's free-position set (positions are 1-based); its
    level-n width is exactly 2^g(n)."""
    if x.n < depth:
        raise TreeError("base string shorter than the requested depth")
    if len(g) < depth + 1:
        raise TreeError("order table shorter than the requested depth")
    spec = ShatterSpec.from_order(g[: depth + 1])
    free = set(spec.free_positions)
    levels: list[list[BitString]] = [[EMPTY]]
    for n in range(1, depth + 1):
        prev = levels[-1]
        if n in free:
            levels.append([s.child(bit) for s in prev for bit in (0, 1)])
        else:
            bit = x.bit(n - 1)
            levels.append([s.child(bit) for s in prev])
    return PrunedTree(levels)


def deficiency_transfer_check(
    x: BitString, t: PrunedTree, k: int, machine: ReferenceMachine
) -> tuple[int, int, int]:
    """Level-k deficiency of the shattered tree against the base-prefix
    deficiency plus the log-width; returns (lhs, rhs, slack) where slack =
    lhs - rhs estimates the additive constant empirically."""
    level = t.level(k)
    width = len(level)
    log_w = width.bit_length() - 1
    if (1 << log_w) != width:
        raise TreeError("transfer check expects exact power-of-two widths")
    # Base-level deficiency: the literal cost is shared by every string of
    # the level, so only registered compressions can raise the maximum.
    best_cost = literal_cost(k)
    members = set(level)
    for out, cost in machine.registered_best().items():
        if out.n == k and cost < best_cost and out in members:
            best_cost = cost
    lhs = k - best_cost
    rhs = machine.deficiency(x.prefix(k)) + log_w
    return lhs, rhs, lhs - rhs


class WeightedPairSet:
    """A finite set of (n, m) pairs with weight sum 2^-n over members."""

    def __init__(self, pairs=()):
        self.pairs = frozenset((int(a), int(b)) for a, b in pairs)
        for a, b in self.pairs:
            if a < 0 or b < 0:
                raise ValueError("pairs must be naturals")

    def weight(self) -> DyadicRational:
        total = DYADIC_ZERO
        for a, _ in self.pairs:
            total = total + DyadicRational.pow2(-a)
        return total

    def __len__(self) -> int:
        return len(self.pairs)

    def __or__(self, other: "WeightedPairSet") -> "WeightedPairSet":
        return WeightedPairSet(self.pairs | other.pairs)

    def __contains__(self, pair) -> bool:
        return (int(pair[0]), int(pair[1])) in self.pairs


def wgt(x: WeightedPairSet) -> DyadicRational:
    return x.weight()


def d_set_enumerate(
    machine: ReferenceMachine, len_max: int, k_max: int
) -> WeightedPairSet:
    """All pairs (|s|, pair-rank(s, k)) with cost(s) <= |s| - k for
    1 <= k <= k_max and |s| <= len_max.  Only registered entries can make a
    string cheaper than its length, so the scan is over the codebooks."""
    pairs = []
    for out, cost in machine.registered_best().items():
        if out.n > len_max:
            continue
        for k in range(1, min(k_max, out.n - cost) + 1):
            pairs.append((out.n, rank_pair(out, k)))
    return WeightedPairSet(pairs)


def positive_tree(
    x: WeightedPairSet, k: int, depth: int
) -> tuple[Tree, DyadicRational, ClopenSet]:
    """The tree of strings none of whose prefixes is k-excluded by the
    pair set, built level-wise to the depth bound; deadends allowed.

    Also returns the exact measure of the complement of the path set,
    restricted to depth-bound information: the clopen union of the
    excluded strings' cylinders.
    """
    excluded: set[BitString] = set()
    for a, b in x.pairs:
        sigma, kk = unrank_pair(b)
        if kk == k and sigma.n == a and sigma.n <= depth:
            excluded.add(sigma)
    levels: list[list[BitString]] = []
    if EMPTY in excluded:
        tree = Tree([[]])
        comp = ClopenSet([EMPTY])
        return tree, comp.measure(), comp
    levels.append([EMPTY])
    for n in range(1, depth + 1):
        nxt = [
            child
            for s in levels[-1]
            for child in (s.child(0), s.child(1))
            if child not in excluded
        ]
        levels.append(nxt)
    comp = ClopenSet(excluded)
    return Tree(levels), comp.measure(), comp
