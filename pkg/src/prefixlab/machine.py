"""A concrete prefix-free reference machine with exactly computable
description complexity.

The machine is deliberately not universal.  Its program set is

* the literal branch: ``0`` + gamma(|s|+1) + the bits of ``s``, which
  outputs ``s``; and
* the registered branch: ``1`` + gamma(i) + a codeword of the i-th
  registered codebook.

Both branches are prefix-free, so the whole program set is, and every
quantity of interest (description cost, algorithmic weight, counting
bounds) is computable by finite inspection.  Registering a codebook under
machine index i costs exactly c = 1 + |gamma(i)| extra bits per program,
which is the simulation constant in cost(s) <= cost_book(s) + c.

Naturals are identified with strings through the length-lexicographic
bijection (see ``bits.string_from_rank``), so the description cost of a
number n is the cost of its rank string.
"""

from __future__ import annotations

import hashlib
import json
from typing import Iterable, Iterator, Optional

from .bits import (
    EMPTY,
    BitString,
    DYADIC_ZERO,
    DyadicRational,
    MalformedCodeword,
    _gamma_decode_at,
    elias_gamma,
    gamma_length,
    gamma_nat,
    gamma_nat_length,
    string_from_rank,
)

__all__ = [
    "PrefixFreeCodebook",
    "ConditionalCodebook",
    "ReferenceMachine",
    "MachineSlot",
    "CodebookError",
    "literal_cost",
]


class CodebookError(ValueError):
    """A codebook violates prefix-freeness or the Kraft weight bound."""


def literal_cost(length: int) -> int:
    """Length of the literal program for any string of the given length."""
    return 1 + gamma_nat_length(length) + length


class _PrefixFreeIndex:
    """Antichain bookkeeping shared by both codebook kinds: a set of words
    plus the set of their proper prefixes, for O(|w|) conflict checks."""

    __slots__ = ("words", "interior")

    def __init__(self):
        self.words: set[BitString] = set()
        self.interior: set[BitString] = set()

    def check(self, w: BitString) -> None:
        if w in self.words or w in self.interior:
            raise CodebookError(f"codeword {w.text()!r} conflicts with the codebook")
        for k in range(w.n):
            if w.prefix(k) in self.words:
                raise CodebookError(
                    f"codeword {w.text()!r} extends existing codeword"
                )

    def add(self, w: BitString) -> None:
        self.check(w)
        self.words.add(w)
        for k in range(w.n):
            self.interior.add(w.prefix(k))


class PrefixFreeCodebook:
    """A finite prefix-free map codeword -> output with Kraft weight <= 1."""

    def __init__(self, entries: Iterable[tuple[BitString, BitString]] = ()):
        self._index = _PrefixFreeIndex()
        self.entries: dict[BitString, BitString] = {}
        self.weight: DyadicRational = DYADIC_ZERO
        self._listeners: list = []
        for cw, out in entries:
            self.add(cw, out)

    def add(self, codeword: BitString, output: BitString) -> None:
        self._index.check(codeword)
        w = self.weight + DyadicRational.pow2(-codeword.n)
        if w > 1:
            raise CodebookError("codebook weight would exceed 1")
        self._index.add(codeword)
        self.entries[codeword] = output
        self.weight = w
        for cb in self._listeners:
            cb(codeword, output)

    def __len__(self) -> int:
        return len(self.entries)

    def save(self) -> str:
        """File format: one line per entry, 'codeword-bits TAB output-bits'."""
        return "".join(
            f"{cw.text()}\t{out.text()}\n" for cw, out in sorted(self.entries.items())
        )

    @classmethod
    def load(cls, text: str) -> "PrefixFreeCodebook":
        book = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                cw_s, out_s = line.split("\t")
            except ValueError as exc:
                raise CodebookError(f"line {lineno}: expected two fields") from exc
            book.add(BitString.from_text(cw_s), BitString.from_text(out_s))
        return book


class ConditionalCodebook:
    """A finite map codeword -> (condition, output); prefix-free and of
    weight <= 1 separately for each fixed condition string."""

    def __init__(self, entries: Iterable[tuple[BitString, BitString, BitString]] = ()):
        self._per_tau: dict[BitString, _PrefixFreeIndex] = {}
        self._weight: dict[BitString, DyadicRational] = {}
        self.entries: dict[BitString, tuple[BitString, BitString]] = {}
        self._listeners: list = []
        for cw, tau, out in entries:
            self.add(cw, tau, out)

    def add(self, codeword: BitString, tau: BitString, output: BitString) -> None:
        idx = self._per_tau.setdefault(tau, _PrefixFreeIndex())
        idx.check(codeword)
        w = self._weight.get(tau, DYADIC_ZERO) + DyadicRational.pow2(-codeword.n)
        if w > 1:
            raise CodebookError("conditional codebook weight would exceed 1")
        idx.add(codeword)
        self._weight[tau] = w
        self.entries[codeword] = (tau, output)
        for cb in self._listeners:
            cb(codeword, tau, output)

    def __len__(self) -> int:
        return len(self.entries)


class MachineSlot:
    """A registered codebook that may still grow.  New entries become
    visible to the machine immediately; the simulation constant is fixed
    at registration time."""

    __slots__ = ("book", "constant", "index")

    def __init__(self, book: PrefixFreeCodebook, constant: int, index: int):
        self.book = book
        self.constant = constant
        self.index = index

    def add(self, codeword: BitString, output: BitString) -> None:
        self.book.add(codeword, output)


class ReferenceMachine:
    """The reference machine: literal coding plus registered codebooks."""

    def __init__(self):
        self._books: list[PrefixFreeCodebook] = []
        self._cond_books: list[ConditionalCodebook] = []
        # best registered total program length per output / per (tau, output)
        self._best: dict[BitString, int] = {}
        self._cond_best: dict[tuple[BitString, BitString], int] = {}
        self.version = 0

    # -- registration ---------------------------------------------------

    def register(self, book: PrefixFreeCodebook) -> int:
        """Simulate ``book`` under a fresh sub-prefix; returns the exact
        constant c with cost(s) <= book_cost(s) + c from now on.  The book
        may keep growing afterwards; costs only ever decrease."""
        if book.weight > 1:
            raise CodebookError("cannot register a codebook of weight > 1")
        index = len(self._books) + 1
        c = 1 + gamma_length(index)
        self._books.append(book)
        for cw, out in book.entries.items():
            self._note(out, cw.n + c)
        book._listeners.append(lambda cw, out, c=c: self._note(out, cw.n + c))
        self.version += 1
        return c

    def open_slot(self) -> MachineSlot:
        """Register an empty growable codebook and hand back its slot."""
        book = PrefixFreeCodebook()
        c = self.register(book)
        return MachineSlot(book, c, len(self._books))

    def register_conditional(self, book: ConditionalCodebook) -> int:
        index = len(self._cond_books) + 1
        c = 1 + gamma_length(index)
        self._cond_books.append(book)
        for cw, (tau, out) in book.entries.items():
            self._note_cond(tau, out, cw.n + c)
        book._listeners.append(
            lambda cw, tau, out, c=c: self._note_cond(tau, out, cw.n + c)
        )
        self.version += 1
        return c

    def _note(self, out: BitString, cost: int) -> None:
        cur = self._best.get(out)
        if cur is None or cost < cur:
            self._best[out] = cost
        self.version += 1

    def _note_cond(self, tau: BitString, out: BitString, cost: int) -> None:
        key = (tau, out)
        cur = self._cond_best.get(key)
        if cur is None or cost < cur:
            self._cond_best[key] = cost
        self.version += 1

    # -- description cost -------------------------------------------------

    def k_hat(self, s: BitString) -> int:
        """Minimum program length producing ``s``: the literal branch always
        applies, registered codebooks may beat it."""
        cost = literal_cost(s.n)
        reg = self._best.get(s)
        return cost if reg is None or cost <= reg else reg

    def k_hat_nat(self, n: int) -> int:
        """Description cost of a natural, via the length-lex rank bijection."""
        return self.k_hat(string_from_rank(n))

    def k_hat_cond(self, s: BitString, tau: BitString) -> Optional[int]:
        """Minimum conditional program length; None when no branch applies
        (tau not a prefix of s and no registered conditional entry)."""
        best: Optional[int] = None
        if tau.is_prefix_of(s):
            rho_len = s.n - tau.n
            best = 1 + gamma_nat_length(rho_len) + rho_len
        reg = self._cond_best.get((tau, s))
        if reg is not None and (best is None or reg < best):
            best = reg
        return best

    def registered_best(self) -> dict[BitString, int]:
        """Read-only view: best registered program length per output."""
        return self._best

    def deficiency(self, s: BitString) -> int:
        return s.n - self.k_hat(s)

    def deficiency_profile(
        self, levels: dict[int, Iterable[BitString]]
    ) -> dict[int, Optional[int]]:
        """Per-level max deficiency; None marks an empty level (the
        supremum over an empty set must not fake incompressibility)."""
        out: dict[int, Optional[int]] = {}
        for n, strings in levels.items():
            best: Optional[int] = None
            for s in strings:
                d = self.deficiency(s)
                if best is None or d > best:
                    best = d
            out[n] = best
        return out

    def level_deficiency(self, strings: Iterable[BitString]) -> Optional[int]:
        best: Optional[int] = None
        for s in strings:
            d = self.deficiency(s)
            if best is None or d > best:
                best = d
        return best

    # -- algorithmic weight ----------------------------------------------

    def m_hat(self, s: BitString) -> DyadicRational:
        """Discrete a priori probability: total weight 2^-|p| of all
        machine programs producing ``s``, literal branch included."""
        total = DyadicRational.pow2(-literal_cost(s.n))
        for i, book in enumerate(self._books, 1):
            c = 1 + gamma_length(i)
            for cw, out in book.entries.items():
                if out == s:
                    total = total + DyadicRational.pow2(-(cw.n + c))
        return total

    def kraft_weight(self) -> DyadicRational:
        """Exact total weight of the whole program set.  The literal branch
        sums to exactly 1/2 in closed form (one gamma codeword block per
        length), so the result is 1/2 plus the scaled registered weights."""
        total = DyadicRational(1, 1)
        for i, book in enumerate(self._books, 1):
            c = 1 + gamma_length(i)
            total = total + book.weight.shift(-c)
        return total

    def counting_check(self, m: int, len_max: int) -> tuple[int, bool]:
        """Exact count of strings with cost <= m, and the counting-theorem
        bound count < 2^(m+1) implied by Kraft weight <= 1."""
        count = 0
        length = 0
        covered: list[int] = []
        while literal_cost(length) <= m:
            count += 1 << length
            covered.append(length)
            length += 1
        if len_max < max(covered, default=0):
            raise ValueError("len_max smaller than the literal search range")
        lit_lens = set(covered)
        for out, cost in self._best.items():
            if cost <= m and out.n not in lit_lens:
                count += 1
        return count, count < (1 << (m + 1))

    def chain_rule_monitor(
        self, pairs: Iterable[tuple[BitString, BitString]]
    ) -> int:
        """Measured chain-rule overhead: the largest value of
        cost(s) - cost(t) - cost(s|t) over the given pairs with t a prefix
        of s.  The machine is not universal, so this is a monitored
        quantity, not a certified constant; with literal coding alone it
        stays at most 1 (gamma lengths are subadditive up to one step)."""
        worst = None
        for s, t in pairs:
            cond = self.k_hat_cond(s, t)
            if cond is None:
                continue
            gap = self.k_hat(s) - self.k_hat(t) - cond
            if worst is None or gap > worst:
                worst = gap
        if worst is None:
            raise ValueError("no applicable pairs to monitor")
        return worst

    # -- decoding ----------------------------------------------------------

    def decode_program(self, p: BitString) -> BitString:
        """Run one complete program; raises MalformedCodeword otherwise."""
        if p.n == 0:
            raise MalformedCodeword("empty program")
        if p.bit(0) == 0:
            n, pos = _gamma_decode_at(p, 1)
            length = n - 1
            if pos + length != p.n:
                raise MalformedCodeword("literal payload length mismatch")
            return p.drop_prefix(pos)
        index, pos = _gamma_decode_at(p, 1)
        if not 1 <= index <= len(self._books):
            raise MalformedCodeword(f"no registered machine {index}")
        rest = p.drop_prefix(pos)
        out = self._books[index - 1].entries.get(rest)
        if out is None:
            raise MalformedCodeword("not a codeword of the registered machine")
        return out

    def programs(self) -> Iterator[tuple[BitString, BitString]]:
        """All registered-branch programs, plus a literal generator is not
        included (it is infinite); see decode_program for full semantics."""
        for i, book in enumerate(self._books, 1):
            prefix = BitString(1, 1).concat(elias_gamma(i))
            for cw, out in book.entries.items():
                yield prefix.concat(cw), out

    # -- snapshots and state dumps ----------------------------------------

    def snapshot(self) -> "ReferenceMachine":
        """An immutable-in-practice copy: later registrations or entry
        additions on the original do not affect the copy."""
        m = ReferenceMachine()
        for book in self._books:
            m.register(PrefixFreeCodebook(book.entries.items()))
        for cbook in self._cond_books:
            m.register_conditional(
                ConditionalCodebook(
                    (cw, tau, out) for cw, (tau, out) in cbook.entries.items()
                )
            )
        return m

    def dump(self) -> str:
        """Machine state as JSON: sub-prefix table, codebooks, exact Kraft
        weight.  Canonical (sorted, fixed separators) so digests are stable."""
        state = {
            "books": [
                {
                    "subprefix": "1" + elias_gamma(i).text(),
                    "constant": 1 + gamma_length(i),
                    "entries": sorted(
                        [cw.text(), out.text()] for cw, out in book.entries.items()
                    ),
                }
                for i, book in enumerate(self._books, 1)
            ],
            "conditional_books": [
                {
                    "subprefix": "1" + elias_gamma(i).text(),
                    "constant": 1 + gamma_length(i),
                    "entries": sorted(
                        [cw.text(), tau.text(), out.text()]
                        for cw, (tau, out) in cbook.entries.items()
                    ),
                }
                for i, cbook in enumerate(self._cond_books, 1)
            ],
            "kraft_weight": str(self.kraft_weight()),
        }
        return json.dumps(state, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def load(cls, text: str) -> "ReferenceMachine":
        state = json.loads(text)
        m = cls()
        for spec in state.get("books", []):
            book = PrefixFreeCodebook(
                (BitString.from_text(cw), BitString.from_text(out))
                for cw, out in spec["entries"]
            )
            m.register(book)
        for spec in state.get("conditional_books", []):
            cbook = ConditionalCodebook(
                (
                    BitString.from_text(cw),
                    BitString.from_text(tau),
                    BitString.from_text(out),
                )
                for cw, tau, out in spec["entries"]
            )
            m.register_conditional(cbook)
        return m

    def state_digest(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()
