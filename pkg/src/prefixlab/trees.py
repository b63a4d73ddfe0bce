"""Level-indexed trees of binary strings, width and fatness analytics,
tree-prefix coding for the prefix topology, and the effective-properness
witness search.

Trees are stored level-wise as sorted string tuples rather than as pointer
structures; width queries and level algebra dominate the workload here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .bits import BitString, EMPTY, MalformedCodeword

__all__ = [
    "Tree",
    "PrunedTree",
    "TreePrefix",
    "TreeError",
    "width_profile",
    "prune_deadends",
    "fatness_check",
    "tree_prefix_code",
    "tree_prefix_decode",
    "prefix_code_length",
    "basic_open_member",
    "TreeClassPresentation",
    "properness_witness",
    "WitnessSearch",
]


class TreeError(ValueError):
    pass


def _normalize_levels(levels: Sequence[Iterable[BitString]]):
    out = []
    for n, level in enumerate(levels):
        strings = tuple(sorted(set(level)))
        for s in strings:
            if s.n != n:
                raise TreeError(f"level {n} holds a string of length {s.n}")
        out.append(strings)
    return tuple(out)


class Tree:
    """A downward-closed set of strings, stored level by level up to a
    depth bound.  Deadends are allowed (see PrunedTree for the pruned
    variant)."""

    def __init__(self, levels: Sequence[Iterable[BitString]]):
        self.levels = _normalize_levels(levels)
        for n in range(1, len(self.levels)):
            parents = set(self.levels[n - 1])
            for s in self.levels[n]:
                if s.parent() not in parents:
                    raise TreeError(f"not downward closed at level {n}: {s.text()}")

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def level(self, n: int) -> tuple[BitString, ...]:
        return self.levels[n]

    def widths(self) -> list[int]:
        return [len(level) for level in self.levels]

    def is_empty(self) -> bool:
        return not self.levels or not self.levels[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, Tree) and self.levels == other.levels

    def __hash__(self) -> int:
        return hash(self.levels)

    def contains(self, s: BitString) -> bool:
        return s.n <= self.depth and s in set(self.levels[s.n])

    def save(self) -> str:
        """Tree file format: a 'level n:' line, then one string per line;
        the empty string is written as '.' so blank lines stay ignorable."""
        lines = []
        for n, level in enumerate(self.levels):
            lines.append(f"level {n}:")
            lines.extend(s.text() or "." for s in level)
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "Tree":
        levels: list[list[BitString]] = []
        current: Optional[list[BitString]] = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("level ") and line.endswith(":"):
                idx = int(line[len("level ") : -1])
                if idx != len(levels):
                    raise TreeError(f"line {lineno}: expected level {len(levels)}")
                current = []
                levels.append(current)
            else:
                if current is None:
                    raise TreeError(f"line {lineno}: string before any level header")
                current.append(EMPTY if line == "." else BitString.from_text(line))
        return cls(levels)


class PrunedTree(Tree):
    """A tree pruned up to its depth bound: every string below the final
    level has an extension one level down."""

    def __init__(self, levels: Sequence[Iterable[BitString]]):
        super().__init__(levels)
        for n in range(len(self.levels) - 1):
            children = {s.parent() for s in self.levels[n + 1]}
            for s in self.levels[n]:
                if s not in children:
                    raise TreeError(f"deadend at level {n}: {s.text()!r}")

    @classmethod
    def parse(cls, text: str) -> "PrunedTree":
        return cls(Tree.parse(text).levels)


class TreePrefix(PrunedTree):
    """A depth-n prefix of a pruned tree: downward closed, every maximal
    string at depth exactly n.  Structurally the same constraint as a
    pruned tree truncated at depth n."""

    def code(self) -> BitString:
        return tree_prefix_code(self)

    def extends(self, other: "TreePrefix") -> bool:
        """The prefix relation on tree-prefixes."""
        return (
            other.depth <= self.depth
            and self.levels[: other.depth + 1] == other.levels
        )


def width_profile(t: Tree) -> list[int]:
    return t.widths()


def prune_deadends(levels: Sequence[Iterable[BitString]]) -> PrunedTree:
    """Remove strings with no extension at the final level; idempotent.
    Rejects input that is not downward closed."""
    tree = Tree(levels)  # validates downward closure
    lv = [set(level) for level in tree.levels]
    for n in range(len(lv) - 2, -1, -1):
        parents = {s.parent() for s in lv[n + 1]}
        lv[n] = {s for s in lv[n] if s in parents}
    while lv and not lv[-1] and len(lv) > 1:
        lv.pop()
    if lv and not lv[0]:
        lv = [set()]
    return PrunedTree([sorted(level) for level in lv])


def fatness_check(
    level_sets: Sequence[Iterable[BitString]], g: Sequence[int]
) -> list[bool]:
    """Per-n report of max_{i<=n} |D cap 2^i| >= g(n).

    ``g`` is an order table on 0..len-1; it must be nondecreasing on the
    tested range (orders are nondecreasing by definition).
    """
    n_max = min(len(level_sets), len(g)) - 1
    for i in range(n_max):
        if g[i + 1] < g[i]:
            raise TreeError("g is not nondecreasing on the tested range")
    out = []
    running = 0
    for n in range(n_max + 1):
        running = max(running, len(set(level_sets[n])))
        out.append(running >= g[n])
    return out


def prefix_code_length(widths: Sequence[int]) -> int:
    """Code length of a depth-n prefix, from its width sequence alone:
    each level contributes one bit per potential child of the level above."""
    return sum(2 * w for w in widths[:-1])


def tree_prefix_code(f: PrunedTree) -> BitString:
    """Level-bitmap coding of a tree-prefix.

    Level k contributes one bit per child slot of the level-(k-1) strings
    in lexicographic order.  The code of a prefix extends the codes of all
    its sub-prefixes, so the coding preserves the prefix relations, and the
    code length depends only on the width sequence.
    """
    v = 0
    n = 0
    for k in range(1, f.depth + 1):
        present = set(f.levels[k])
        for s in f.levels[k - 1]:
            v = (v << 1) | (1 if s.child(0) in present else 0)
            v = (v << 1) | (1 if s.child(1) in present else 0)
            n += 2
    return BitString(n, v)


def tree_prefix_decode(code: BitString) -> TreePrefix:
    """Inverse of tree_prefix_code; rejects bitmaps with deadends, with a
    truncated final level, or with trailing bits."""
    levels: list[list[BitString]] = [[EMPTY]]
    pos = 0
    while pos < code.n:
        prev = levels[-1]
        need = 2 * len(prev)
        if pos + need > code.n:
            raise MalformedCodeword("truncated level bitmap")
        nxt: list[BitString] = []
        for s in prev:
            b0 = code.bit(pos)
            b1 = code.bit(pos + 1)
            pos += 2
            if not b0 and not b1:
                raise MalformedCodeword(
                    f"bitmap describes a deadend at {s.text()!r}"
                )
            if b0:
                nxt.append(s.child(0))
            if b1:
                nxt.append(s.child(1))
        levels.append(nxt)
    return TreePrefix(levels)


def basic_open_member(f: PrunedTree, t: Tree) -> bool:
    """Whether ``t`` lies in the basic open set of the prefix ``f``, i.e.
    the depth-|f| truncation of ``t`` equals ``f`` exactly."""
    if f.depth > t.depth:
        raise TreeError("prefix deeper than the tree it is tested against")
    return t.levels[: f.depth + 1] == f.levels


class TreeClassPresentation:
    """Stage-indexed co-enumeration of a class of pruned trees: at stage s
    a finite, monotonically growing set of excluded tree-prefix codes.
    A tree survives stage s if it extends no excluded prefix."""

    def __init__(self, staged_exclusions: Iterable[tuple[int, BitString]] = ()):
        self._items: list[tuple[int, BitString]] = sorted(
            staged_exclusions, key=lambda it: (it[0], it[1])
        )
        if any(stage < 0 for stage, _ in self._items):
            raise TreeError("stages must be nonnegative")

    def exclude(self, stage: int, code: BitString) -> None:
        self._items.append((stage, code))
        self._items.sort(key=lambda it: (it[0], it[1]))

    def exclusions_at(self, stage: int) -> tuple[BitString, ...]:
        return tuple(code for s, code in self._items if s <= stage)

    def excludes_prefix(self, code: BitString, stage: int) -> bool:
        """Whether a prefix with this code extends an excluded prefix."""
        return any(e.is_prefix_of(code) for e in self.exclusions_at(stage))

    def save(self) -> str:
        lines = []
        last = None
        for stage, code in self._items:
            if stage != last:
                lines.append(f"stage {stage}:")
                last = stage
            lines.append(code.text())
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def parse(cls, text: str) -> "TreeClassPresentation":
        items: list[tuple[int, BitString]] = []
        stage: Optional[int] = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("stage ") and line.endswith(":"):
                stage = int(line[len("stage ") : -1])
            else:
                if stage is None:
                    raise TreeError(f"line {lineno}: code before any stage header")
                items.append((stage, BitString.from_text(line)))
        return cls(items)


@dataclass
class WitnessSearch:
    """Outcome of properness_witness: per k, the found depth or None on
    budget exhaustion (a timeout is a normal outcome, not a failure)."""

    depths: dict[int, Optional[int]] = field(default_factory=dict)
    nodes_used: int = 0


def _narrow_survivor_exists(
    presentation: TreeClassPresentation,
    stage: int,
    depth: int,
    width_cap: int,
    budget: list[int],
) -> Optional[bool]:
    """Depth-first search for a surviving depth-``depth`` prefix of width
    <= width_cap at its final level.  None means the node budget ran out."""
    exclusions = presentation.exclusions_at(stage)

    def rec(levels: list[list[BitString]], code_v: int, code_n: int) -> Optional[bool]:
        budget[0] -= 1
        if budget[0] < 0:
            return None
        code = BitString(code_n, code_v)
        if any(e.is_prefix_of(code) for e in exclusions):
            return False
        if len(levels) - 1 == depth:
            return True
        prev = levels[-1]
        # Child configurations per string: 1 = left, 2 = right, 3 = both.
        # Pruned prefixes need >= 1 child each; cap total width.
        def assign(i: int, nxt: list[BitString], v: int, n: int) -> Optional[bool]:
            if i == len(prev):
                res = rec(levels + [nxt], v, n)
                return res
            for cfg in (1, 2, 3):
                width = len(nxt) + (2 if cfg == 3 else 1) + (len(prev) - i - 1)
                if width > width_cap:
                    continue
                add = []
                if cfg & 1:
                    add.append(prev[i].child(0))
                if cfg & 2:
                    add.append(prev[i].child(1))
                bits = (1 if cfg & 1 else 0) << 1 | (1 if cfg & 2 else 0)
                res = assign(i + 1, nxt + add, (v << 2) | bits, n + 2)
                if res:
                    return True
                if res is None:
                    return None
            return False

        return assign(0, [], code_v, code_n)

    return rec([[EMPTY]], 0, 0)


def properness_witness(
    presentation: TreeClassPresentation,
    k_max: int,
    stage: int,
    depth_max: int,
    node_budget: int = 200_000,
) -> WitnessSearch:
    """For each k <= k_max, search breadth-first over depths for the least
    n such that every depth-n prefix surviving the stage exclusions has
    width > k at level n.  Budget exhaustion is reported per k."""
    result = WitnessSearch()
    for k in range(1, k_max + 1):
        found: Optional[int] = None
        for n in range(1, depth_max + 1):
            budget = [node_budget]
            exists = _narrow_survivor_exists(presentation, stage, n, k, budget)
            result.nodes_used += node_budget - max(budget[0], 0)
            if exists is None:
                break
            if not exists:
                found = n
                break
        result.depths[k] = found
    return result
