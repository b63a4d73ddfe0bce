"""Bit-level primitives: packed bit strings, exact dyadic rationals, clopen
sets of the Cantor space, self-delimiting integer codes, string/number
pairing, and seeded oracle bit streams.

Everything here is exact.  No floating point is used anywhere; measures and
weights are dyadic rationals with arbitrary-precision numerators.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import isqrt
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "BitString",
    "EMPTY",
    "DyadicRational",
    "DYADIC_ZERO",
    "DYADIC_ONE",
    "ClopenSet",
    "MalformedCodeword",
    "elias_gamma",
    "elias_gamma_decode",
    "gamma_length",
    "gamma_nat",
    "gamma_nat_decode",
    "gamma_nat_length",
    "string_rank",
    "string_from_rank",
    "rank_pair",
    "unrank_pair",
    "OracleStream",
    "TapeExhausted",
]


class MalformedCodeword(ValueError):
    """A bit sequence is not a complete codeword of the code in question."""


class BitString:
    """An immutable finite binary string, packed as (length, integer value).

    The value stores bits most-significant-first, so the first bit of the
    string is the top bit of ``value``.  The empty string is valid.  Prefix
    queries, concatenation and rank conversions are cheap.
    """

    __slots__ = ("n", "v")

    def __init__(self, n: int, v: int):
        if n < 0 or v < 0 or v >> n:
            raise ValueError(f"invalid bit string: length={n} value={v}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "v", v)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("BitString is immutable")

    @classmethod
    def from_text(cls, text: str) -> "BitString":
        text = text.strip()
        if text and set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(len(text), int(text, 2) if text else 0)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        n = 0
        v = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit must be 0 or 1, got {b!r}")
            v = (v << 1) | b
            n += 1
        return cls(n, v)

    def text(self) -> str:
        return format(self.v, f"0{self.n}b") if self.n else ""

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitString) and self.n == other.n and self.v == other.v
        )

    def __hash__(self) -> int:
        return hash((self.n, self.v))

    def __lt__(self, other: "BitString") -> bool:
        # Length-lexicographic order; coincides with rank order.
        return (self.n, self.v) < (other.n, other.v)

    def __le__(self, other: "BitString") -> bool:
        return (self.n, self.v) <= (other.n, other.v)

    def __repr__(self) -> str:
        return f"BitString({self.text()!r})"

    def bit(self, i: int) -> int:
        """Bit at 0-based position ``i`` (the first bit is position 0)."""
        if not 0 <= i < self.n:
            raise IndexError(i)
        return (self.v >> (self.n - 1 - i)) & 1

    def bits(self) -> Iterator[int]:
        for i in range(self.n):
            yield (self.v >> (self.n - 1 - i)) & 1

    def is_prefix_of(self, other: "BitString") -> bool:
        """The prefix partial order; decidable in O(|self|) word ops."""
        return self.n <= other.n and (other.v >> (other.n - self.n)) == self.v

    def extends(self, other: "BitString") -> bool:
        return other.is_prefix_of(self)

    def prefix(self, k: int) -> "BitString":
        if not 0 <= k <= self.n:
            raise ValueError(k)
        return BitString(k, self.v >> (self.n - k))

    def drop_prefix(self, k: int) -> "BitString":
        """The suffix left after removing the first ``k`` bits."""
        if not 0 <= k <= self.n:
            raise ValueError(k)
        return BitString(self.n - k, self.v & ((1 << (self.n - k)) - 1))

    def concat(self, other: "BitString") -> "BitString":
        return BitString(self.n + other.n, (self.v << other.n) | other.v)

    __add__ = concat

    def child(self, bit: int) -> "BitString":
        if bit not in (0, 1):
            raise ValueError(bit)
        return BitString(self.n + 1, (self.v << 1) | bit)

    def parent(self) -> "BitString":
        if self.n == 0:
            raise ValueError("the empty string has no parent")
        return BitString(self.n - 1, self.v >> 1)

    def sibling(self) -> "BitString":
        if self.n == 0:
            raise ValueError("the empty string has no sibling")
        return BitString(self.n, self.v ^ 1)

    def rank(self) -> int:
        """Position in length-lexicographic order: 2^|s| - 1 + value."""
        return (1 << self.n) - 1 + self.v


EMPTY = BitString(0, 0)


def string_rank(s: BitString) -> int:
    return s.rank()


def string_from_rank(r: int) -> BitString:
    if r < 0:
        raise ValueError(r)
    n = (r + 1).bit_length() - 1
    return BitString(n, r + 1 - (1 << n))


def rank_pair(s: BitString, k: int) -> int:
    """Cantor-pair the length-lex rank of ``s`` with ``k``; a bijection
    from strings x naturals onto the naturals."""
    if k < 0:
        raise ValueError(k)
    a = s.rank()
    return (a + k) * (a + k + 1) // 2 + k


def unrank_pair(m: int) -> tuple[BitString, int]:
    if m < 0:
        raise ValueError(m)
    w = (isqrt(8 * m + 1) - 1) // 2
    k = m - w * (w + 1) // 2
    return string_from_rank(w - k), k


def elias_gamma(n: int) -> BitString:
    """Elias gamma code: floor(log2 n) zeros followed by the binary
    expansion of n; total length 2*floor(log2 n) + 1; prefix-free."""
    if n < 1:
        raise ValueError("gamma code is defined for n >= 1")
    lg = n.bit_length() - 1
    return BitString(2 * lg + 1, n)


def gamma_length(n: int) -> int:
    if n < 1:
        raise ValueError(n)
    return 2 * (n.bit_length() - 1) + 1


def _gamma_decode_at(s: BitString, pos: int) -> tuple[int, int]:
    """Decode one gamma codeword starting at ``pos``; return (n, next_pos)."""
    z = 0
    i = pos
    while i < s.n and s.bit(i) == 0:
        z += 1
        i += 1
    if i >= s.n or i + z + 1 > s.n:
        raise MalformedCodeword("truncated gamma codeword")
    v = 0
    for j in range(i, i + z + 1):
        v = (v << 1) | s.bit(j)
    return v, i + z + 1


def elias_gamma_decode(s: BitString) -> int:
    """Decode a complete gamma codeword; reject trailing or missing bits."""
    n, pos = _gamma_decode_at(s, 0)
    if pos != s.n:
        raise MalformedCodeword("trailing bits after gamma codeword")
    return n


def gamma_nat(n: int) -> BitString:
    """Gamma code shifted so every natural including 0 is encodable."""
    return elias_gamma(n + 1)


def gamma_nat_length(n: int) -> int:
    return gamma_length(n + 1)


def gamma_nat_decode(s: BitString) -> int:
    return elias_gamma_decode(s) - 1


class DyadicRational:
    """An exact nonnegative number numerator / 2^exponent.

    Canonical form keeps the exponent minimal: the numerator is odd, or the
    number is an integer stored with exponent 0.  All arithmetic is exact.
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if num < 0 or exp < 0:
            raise ValueError(f"invalid dyadic rational {num}/2^{exp}")
        while exp > 0 and num & 1 == 0 and num:
            num >>= 1
            exp -= 1
        if num == 0:
            exp = 0
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, name, value):  # pragma: no cover
        raise AttributeError("DyadicRational is immutable")

    @classmethod
    def pow2(cls, k: int) -> "DyadicRational":
        """2^k for any integer k (negative k gives a proper fraction)."""
        return cls(1 << k, 0) if k >= 0 else cls(1, -k)

    @classmethod
    def parse(cls, text: str) -> "DyadicRational":
        num_s, _, den_s = text.partition("/")
        if not den_s.startswith("2^"):
            raise ValueError(f"not a dyadic rational literal: {text!r}")
        return cls(int(num_s), int(den_s[2:]))

    def __str__(self) -> str:
        return f"{self.num}/2^{self.exp}"

    def __repr__(self) -> str:
        return f"DyadicRational({self.num}, {self.exp})"

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def _pair(self, other) -> tuple[int, int, int]:
        if isinstance(other, int):
            other = DyadicRational(other)
        if not isinstance(other, DyadicRational):
            return NotImplemented, 0, 0
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other):
        a, b, e = self._pair(other)
        if a is NotImplemented:
            return NotImplemented
        return DyadicRational(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        a, b, e = self._pair(other)
        if a is NotImplemented:
            return NotImplemented
        if a < b:
            raise ValueError("dyadic rationals here are nonnegative")
        return DyadicRational(a - b, e)

    def __mul__(self, other):
        if isinstance(other, int):
            other = DyadicRational(other)
        if not isinstance(other, DyadicRational):
            return NotImplemented
        return DyadicRational(self.num * other.num, self.exp + other.exp)

    __rmul__ = __mul__

    def shift(self, k: int) -> "DyadicRational":
        """Exact multiplication by 2^k (k of either sign)."""
        if k >= 0:
            return DyadicRational(self.num << k, self.exp)
        return DyadicRational(self.num, self.exp - k)

    def halve(self) -> "DyadicRational":
        return self.shift(-1)

    def double(self) -> "DyadicRational":
        return self.shift(1)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            return self.exp == 0 and self.num == other
        return (
            isinstance(other, DyadicRational)
            and self.num == other.num
            and self.exp == other.exp
        )

    def __hash__(self) -> int:
        return hash((self.num, self.exp))

    def __lt__(self, other) -> bool:
        a, b, _ = self._pair(other)
        return a < b

    def __le__(self, other) -> bool:
        a, b, _ = self._pair(other)
        return a <= b

    def __gt__(self, other) -> bool:
        a, b, _ = self._pair(other)
        return a > b

    def __ge__(self, other) -> bool:
        a, b, _ = self._pair(other)
        return a >= b

    def __bool__(self) -> bool:
        return self.num != 0


DYADIC_ZERO = DyadicRational(0)
DYADIC_ONE = DyadicRational(1)


def _canonical_generators(gens: Iterable[BitString]) -> tuple[BitString, ...]:
    # Absorption pass: drop any string that has a proper prefix in the set.
    seen: set[tuple[int, int]] = set()
    for g in sorted(set(gens)):
        key = (g.n, g.v)
        if not any((k, g.v >> (g.n - k)) in seen for k in range(g.n)):
            seen.add(key)
    # Sibling-merge pass, bottom-up by length.  Absorption cannot recur:
    # anything under a merged parent was already under one of its children.
    by_len: dict[int, set[int]] = {}
    for n, v in seen:
        by_len.setdefault(n, set()).add(v)
    for n in range(max(by_len, default=0), 0, -1):
        vals = by_len.get(n)
        if not vals:
            by_len.pop(n, None)
            continue
        merged = {v >> 1 for v in vals if v & 1 == 0 and (v | 1) in vals}
        if merged:
            for p in merged:
                vals.discard(p << 1)
                vals.discard((p << 1) | 1)
            by_len.setdefault(n - 1, set()).update(merged)
        if not vals:
            del by_len[n]
    out = [BitString(n, v) for n, vals in by_len.items() for v in vals]
    out.sort()
    return tuple(out)


class ClopenSet:
    """A finite union of cylinders, kept as the unique canonical antichain
    of cylinder roots (no root a prefix of another, sibling pairs merged)."""

    __slots__ = ("gens",)

    def __init__(self, generators: Iterable[BitString] = ()):
        object.__setattr__(self, "gens", _canonical_generators(generators))

    def __setattr__(self, name, value):  # pragma: no cover
        raise AttributeError("ClopenSet is immutable")

    @classmethod
    def full(cls) -> "ClopenSet":
        return cls((EMPTY,))

    @classmethod
    def empty(cls) -> "ClopenSet":
        return cls(())

    def __eq__(self, other) -> bool:
        return isinstance(other, ClopenSet) and self.gens == other.gens

    def __hash__(self) -> int:
        return hash(self.gens)

    def __repr__(self) -> str:
        return f"ClopenSet([{', '.join(g.text() or 'λ' for g in self.gens)}])"

    def is_empty(self) -> bool:
        return not self.gens

    def max_depth(self) -> int:
        return max((g.n for g in self.gens), default=0)

    def measure(self) -> DyadicRational:
        total = DYADIC_ZERO
        for g in self.gens:
            total = total + DyadicRational.pow2(-g.n)
        return total

    def covers(self, s: BitString) -> bool:
        """Whether the whole cylinder of ``s`` lies inside the set."""
        return any(g.is_prefix_of(s) for g in self.gens)

    def meets(self, s: BitString) -> bool:
        """Whether the cylinder of ``s`` intersects the set."""
        return any(g.is_prefix_of(s) or s.is_prefix_of(g) for g in self.gens)

    def union(self, other: "ClopenSet") -> "ClopenSet":
        return ClopenSet(self.gens + other.gens)

    def intersection(self, other: "ClopenSet") -> "ClopenSet":
        out = []
        for a in self.gens:
            for b in other.gens:
                if a.is_prefix_of(b):
                    out.append(b)
                elif b.is_prefix_of(a):
                    out.append(a)
        return ClopenSet(out)

    def complement(self, depth: int) -> "ClopenSet":
        """Complement computed at an explicit finite depth.

        Every generator must have length <= depth; all classes in scope are
        clopen at a known depth, so the caller always has one.
        """
        if any(g.n > depth for g in self.gens):
            raise ValueError("depth too small for complement")
        return ClopenSet.from_indicator(~self.indicator(depth))

    def indicator(self, depth: int) -> np.ndarray:
        """Boolean table over all depth-``depth`` strings, by value."""
        if any(g.n > depth for g in self.gens):
            raise ValueError("depth too small for indicator")
        arr = np.zeros(1 << depth, dtype=bool)
        for g in self.gens:
            step = 1 << (depth - g.n)
            arr[g.v * step : (g.v + 1) * step] = True
        return arr

    @classmethod
    def from_indicator(cls, arr: np.ndarray) -> "ClopenSet":
        depth = int(arr.size).bit_length() - 1
        if 1 << depth != arr.size:
            raise ValueError("indicator length must be a power of two")
        gens: list[BitString] = []

        def walk(n: int, v: int, lo: int, hi: int) -> None:
            seg = arr[lo:hi]
            if not seg.any():
                return
            if seg.all():
                gens.append(BitString(n, v))
                return
            mid = (lo + hi) // 2
            walk(n + 1, v << 1, lo, mid)
            walk(n + 1, (v << 1) | 1, mid, hi)

        walk(0, 0, 0, arr.size)
        return cls(gens)

    def serialize(self) -> str:
        """One generator per line as ASCII 0/1; the empty string is a blank
        line, so an empty set serializes to the empty document."""
        return "".join(g.text() + "\n" for g in self.gens)

    @classmethod
    def deserialize(cls, text: str) -> "ClopenSet":
        return cls(
            BitString.from_text(line) for line in text.splitlines()
        )


class TapeExhausted(RuntimeError):
    """A replayed oracle stream ran past the end of its recorded tape."""


_M64 = (1 << 64) - 1


class OracleStream:
    """A deterministic, replayable bit stream standing in for a random
    oracle.

    Bits come from SplitMix64 (Steele-Lea-Flood splittable generator, the
    exact 64-bit finalizer constants below), consumed most-significant bit
    first from each 64-bit word.  The same seed always yields the identical
    bit sequence on any platform.  Every consumed bit is recorded on a tape;
    a stream constructed from a tape replays the run bit for bit.
    """

    __slots__ = ("seed", "_state", "_buf", "_nbuf", "_tape_v", "_tape_n", "_replay")

    def __init__(self, seed: int):
        object.__setattr__(self, "seed", seed & _M64)
        object.__setattr__(self, "_state", seed & _M64)
        object.__setattr__(self, "_buf", 0)
        object.__setattr__(self, "_nbuf", 0)
        object.__setattr__(self, "_tape_v", 0)
        object.__setattr__(self, "_tape_n", 0)
        object.__setattr__(self, "_replay", None)

    def __setattr__(self, name, value):
        object.__setattr__(self, name, value)

    @classmethod
    def from_tape(cls, tape: BitString) -> "OracleStream":
        s = cls(0)
        s._replay = tape
        return s

    def _next64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _M64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        return z ^ (z >> 31)

    def draw(self, width: int) -> int:
        """Consume exactly ``width`` bits; return them as an integer in
        [0, 2^width)."""
        if width < 0:
            raise ValueError(width)
        if self._replay is not None:
            tape = self._replay
            if self._tape_n + width > tape.n:
                raise TapeExhausted(
                    f"tape has {tape.n} bits, draw needs {self._tape_n + width}"
                )
            v = tape.prefix(self._tape_n + width).drop_prefix(self._tape_n).v
            self._tape_v = (self._tape_v << width) | v
            self._tape_n += width
            return v
        while self._nbuf < width:
            self._buf = (self._buf << 64) | self._next64()
            self._nbuf += 64
        v = self._buf >> (self._nbuf - width)
        self._buf &= (1 << (self._nbuf - width)) - 1
        self._nbuf -= width
        self._tape_v = (self._tape_v << width) | v
        self._tape_n += width
        return v

    def draw_string(self, width: int) -> BitString:
        return BitString(width, self.draw(width))

    @property
    def position(self) -> int:
        """Bits consumed so far."""
        return self._tape_n

    def tape(self) -> BitString:
        return BitString(self._tape_n, self._tape_v)
