"""Online Kraft-Chaitin-Levin codeword allocator.

Turns a stream of (length, payload) requests into an explicit prefix-free
codebook.  The unallocated code space is kept as an antichain of free trie
nodes; a request of length L takes the lexicographically least available
L-bit codeword, splitting the leftmost adequate free node into the sibling
nodes along the allocated path.  Conservation holds exactly at all times:

    spent + sum over free nodes of 2^-depth = 1.
"""

from __future__ import annotations

from .bits import BitString, DYADIC_ZERO, DyadicRational
from .machine import PrefixFreeCodebook

__all__ = ["KCLAllocator", "KCLOverflow"]


class KCLOverflow(Exception):
    """No free node can host the request; granting it would push the
    codebook weight past 1.  The allocator state is unchanged."""


class KCLAllocator:
    def __init__(self):
        # Free nodes as (depth, value), kept sorted by their position as
        # dyadic intervals (leftmost first).  They form an antichain
        # disjoint from every issued codeword's subtree.
        self._free: list[tuple[int, int]] = [(0, 0)]
        self.issued = PrefixFreeCodebook()
        self.spent: DyadicRational = DYADIC_ZERO

    def request(self, length: int, payload: BitString) -> BitString:
        """Allocate the least codeword of exactly ``length`` bits, record
        codeword -> payload, and charge 2^-length.  Deterministic."""
        if length < 0:
            raise ValueError(length)
        for i, (d, v) in enumerate(self._free):
            if d <= length:
                break
        else:
            raise KCLOverflow(f"no room for a length-{length} codeword")
        codeword = BitString(length, v << (length - d))
        # Siblings along the allocated path, left to right: deepest first.
        siblings = [
            (t, (codeword.v >> (length - t)) ^ 1) for t in range(length, d, -1)
        ]
        self._free[i : i + 1] = siblings
        self.issued.add(codeword, payload)
        self.spent = self.spent + DyadicRational.pow2(-length)
        return codeword

    def weight(self) -> DyadicRational:
        """Total weight of issued codewords; always <= 1."""
        return self.spent

    def free_capacity(self) -> DyadicRational:
        total = DYADIC_ZERO
        for d, _ in self._free:
            total = total + DyadicRational.pow2(-d)
        return total

    def free_nodes(self) -> tuple[BitString, ...]:
        return tuple(BitString(d, v) for d, v in self._free)
