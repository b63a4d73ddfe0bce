"""Deep-class certificates at finite stage, incompressibility-constrained
class presentations, Lebesgue-density extension search, and the
Banach-Mazur game harness over trees of incompressible strings.

Finite-stage survivor semantics: a string survives at parameter c when its
deficiency under the current machine state is strictly below c; a prefix
or tree survives when all its strings do.  Deeper machine states only
shrink survivor sets, so recorded certificates never flip from fail to
pass as the stage grows with the machine frozen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .bits import BitString, DYADIC_ZERO, DyadicRational, EMPTY, OracleStream
from .machine import ReferenceMachine
from .trees import (
    PrunedTree,
    Tree,
    TreeClassPresentation,
    TreeError,
    TreePrefix,
    basic_open_member,
    tree_prefix_code,
    tree_prefix_decode,
)

__all__ = [
    "survives",
    "prefix_survives",
    "DeepClassPresentation",
    "CertificateRow",
    "depth_certificate_check",
    "kfld_presentation",
    "kfld_code",
    "density_extension_search",
    "DensitySearchFailure",
    "StrategyFailure",
    "DoubledLevelClass",
    "FinalWidthClass",
    "BasicOpenClass",
    "ExplicitClass",
    "GameState",
    "new_game",
    "opponent_move",
    "banach_mazur_round",
    "run_game",
    "verify_transcript",
    "seeded_presentations",
]


def survives(s: BitString, c: int, machine: ReferenceMachine) -> bool:
    """Finite-stage membership above a single string: deficiency < c."""
    return machine.deficiency(s) < c


def prefix_survives(f: Tree, c: int, machine: ReferenceMachine) -> bool:
    return all(
        survives(s, c, machine) for level in f.levels for s in level
    )


# ---------------------------------------------------------------------------
# Deep-class certificates.


class DeepClassPresentation:
    """Stage-indexed surviving code sets P_n(s), shrinking in s; every
    surviving code at depth n+1 must extend one at depth n."""

    def __init__(self, stages: dict[int, Sequence[Sequence[BitString]]]):
        self.stages = {
            s: [tuple(sorted(level)) for level in levels]
            for s, levels in stages.items()
        }
        keys = sorted(self.stages)
        for a, b in zip(keys, keys[1:]):
            for n, (lv_b) in enumerate(self.stages[b]):
                if n < len(self.stages[a]) and not set(lv_b) <= set(
                    self.stages[a][n]
                ):
                    raise TreeError("survivor sets must shrink with the stage")
        for s, levels in self.stages.items():
            for n in range(1, len(levels)):
                for code in levels[n]:
                    if not any(p.is_prefix_of(code) for p in levels[n - 1]):
                        raise TreeError(
                            "every survivor must extend a shallower survivor"
                        )

    def survivors(self, n: int, stage: int) -> tuple[BitString, ...]:
        usable = [s for s in self.stages if s <= stage]
        if not usable:
            raise TreeError(f"no recorded stage at or below {stage}")
        levels = self.stages[max(usable)]
        return levels[n] if n < len(levels) else ()


@dataclass
class CertificateRow:
    n: int
    mass: DyadicRational
    bound: DyadicRational
    ok: bool
    stage: int
    final: bool = False  # stage certificates are never final


def depth_certificate_check(
    p: DeepClassPresentation,
    g: Sequence[int],
    n_max: int,
    stage: int,
    machine: ReferenceMachine,
) -> list[CertificateRow]:
    """Per-depth algorithmic weight of the surviving codes against the
    2^-g(n) certificate line.  A pass is a stage certificate only: deeper
    stages can only shrink the mass, never grow it."""
    rows = []
    for n in range(n_max + 1):
        mass = DYADIC_ZERO
        for code in p.survivors(n, stage):
            mass = mass + machine.m_hat(code)
        bound = DyadicRational.pow2(-g[n])
        rows.append(
            CertificateRow(n=n, mass=mass, bound=bound, ok=mass <= bound, stage=stage)
        )
    return rows


def kfld_code(sets: Sequence[Iterable[BitString]], lengths: Sequence[int]) -> BitString:
    """Code of a slot-set tuple: concatenated membership bitmaps of each
    set over its full length level, slot by slot; prefix-monotone."""
    v = 0
    n = 0
    for i, strings in enumerate(sets):
        vals = {s.v for s in strings}
        width = 1 << lengths[i]
        for u in range(width):
            v = (v << 1) | (1 if u in vals else 0)
        n += width
    return BitString(n, v)


def kfld_presentation(
    f: Sequence[int],
    lengths: Sequence[int],
    d: Sequence[int],
    machine: ReferenceMachine,
    stage: int,
    slots: int,
) -> DeepClassPresentation:
    """Finite-stage presentation of the class of sequences of string sets
    where slot i holds exactly f(i) strings of length lengths(i), each with
    description cost at least lengths(i) - d(i) at the machine snapshot.

    Slot depth plays the role of code depth; survivors are slot-tuples
    whose members all clear the cost threshold so far.
    """
    from itertools import combinations

    if any(lengths[i + 1] <= lengths[i] for i in range(slots - 1)):
        raise TreeError("slot lengths must increase")
    per_slot: list[list[tuple[BitString, ...]]] = []
    for i in range(slots):
        level = [BitString(lengths[i], v) for v in range(1 << lengths[i])]
        good = [
            s for s in level if machine.k_hat(s) >= lengths[i] - d[i]
        ]
        per_slot.append([tuple(c) for c in combinations(good, f[i])])
    levels: list[list[BitString]] = [[EMPTY]]
    tuples: list[tuple] = [()]
    for i in range(slots):
        nxt = []
        for t in tuples:
            for choice in per_slot[i]:
                nxt.append(t + (choice,))
        tuples = nxt
        levels.append(
            [kfld_code(t, lengths[: i + 1]) for t in tuples]
        )
    return DeepClassPresentation({stage: levels})


# ---------------------------------------------------------------------------
# Density search.


class DensitySearchFailure(RuntimeError):
    """No admissible same-length extensions within the depth bound; a
    finite-stage effect, reported rather than crashed on."""


def _survivor_count(
    tau: BitString, depth: int, c: int, machine: ReferenceMachine
) -> int:
    """Number of depth-``depth`` extensions of tau all of whose prefixes
    above tau survive at parameter c.  tau's own prefixes are checked by
    the caller."""
    frontier = [tau]
    for _ in range(depth - tau.n):
        frontier = [
            child
            for s in frontier
            for child in (s.child(0), s.child(1))
            if survives(child, c, machine)
        ]
        if not frontier:
            return 0
    return len(frontier)


def density_extension_search(
    q: Sequence[BitString],
    c: int,
    depth: int,
    machine: ReferenceMachine,
) -> dict[BitString, BitString]:
    """For each string in ``q`` (all of one length), find same-length
    extensions whose relative survivor density at the depth bound exceeds
    1 - 1/(2|q|); breadth-first over extension lengths, least extension
    first.  The joint survivor set above the choices then has positive
    measure by the union bound.
    """
    if not q:
        return {}
    ell = q[0].n
    if any(s.n != ell for s in q):
        raise ValueError("density search needs equal-length strings")
    if depth < ell:
        raise ValueError("depth bound above the strings' length required")
    size = len(set(q))
    for s in q:
        if not all(survives(s.prefix(k), c, machine) for k in range(s.n + 1)):
            raise DensitySearchFailure(f"{s.text()!r} is already compressed away")
    for target_len in range(ell, depth + 1):
        chosen: dict[BitString, BitString] = {}
        for s in set(q):
            found = None
            for hi in range(1 << (target_len - ell)):
                tau = s.concat(BitString(target_len - ell, hi))
                if not all(
                    survives(tau.prefix(k), c, machine)
                    for k in range(ell + 1, tau.n + 1)
                ):
                    continue
                count = _survivor_count(tau, depth, c, machine)
                # count / 2^(depth-|tau|) > 1 - 1/(2 size), exactly.
                if count * 2 * size > (2 * size - 1) * (1 << (depth - tau.n)):
                    found = tau
                    break
            if found is None:
                break
            chosen[s] = found
        else:
            return chosen
    raise DensitySearchFailure(
        f"no admissible joint extensions up to depth {depth}"
    )


# ---------------------------------------------------------------------------
# Game classes to avoid.  Two presentation styles share one interface:
# certificate checking (does this prefix extend an excluded one) and target
# synthesis (an excluded extension of the current prefix, if any).


class DoubledLevelClass:
    """Rule-backed co-enumeration: excluded are the prefixes of depth at
    least ``d_min`` whose final level takes both children of every string
    of the level above.  Survivors never fully double a level past d_min,
    so they thin out forever; any position escapes by one doubled step."""

    kind = "doubled-level"

    def __init__(self, d_min: int, appears_at: int = 0):
        self.d_min = d_min
        self.appears_at = appears_at

    def code_is_excluded(self, code: BitString, stage: int) -> bool:
        if stage < self.appears_at:
            return False
        try:
            prefix = tree_prefix_decode(code)
        except Exception:
            return False
        return (
            prefix.depth >= self.d_min
            and len(prefix.levels[-1]) == 2 * len(prefix.levels[-2])
        )

    def covering_exclusion(
        self, prefix: TreePrefix, stage: int
    ) -> Optional[BitString]:
        if stage < self.appears_at:
            return None
        for d in range(self.d_min, prefix.depth + 1):
            if len(prefix.levels[d]) == 2 * len(prefix.levels[d - 1]):
                code = tree_prefix_code(TreePrefix(prefix.levels[: d + 1]))
                return code
        return None

    def targets(self, prefix: TreePrefix, stage: int):
        if stage < self.appears_at:
            return
        levels = [list(l) for l in prefix.levels]
        while len(levels) - 1 < max(self.d_min, prefix.depth + 1):
            levels.append([ch for s in levels[-1] for ch in (s.child(0), s.child(1))])
        yield TreePrefix(levels)

    def to_json(self) -> dict:
        return {"kind": self.kind, "d_min": self.d_min, "appears_at": self.appears_at}


class BasicOpenClass:
    """The class of trees extending one fixed prefix; its co-enumeration
    excludes every same-depth prefix other than the fixed one."""

    kind = "basic-open"

    def __init__(self, base: TreePrefix, appears_at: int = 0):
        self.base = base
        self.base_code = tree_prefix_code(base)
        self.appears_at = appears_at

    def code_is_excluded(self, code: BitString, stage: int) -> bool:
        if stage < self.appears_at:
            return False
        try:
            prefix = tree_prefix_decode(code)
        except Exception:
            return False
        return prefix.depth == self.base.depth and code != self.base_code

    def covering_exclusion(
        self, prefix: TreePrefix, stage: int
    ) -> Optional[BitString]:
        if stage < self.appears_at or prefix.depth < self.base.depth:
            return None
        code = tree_prefix_code(TreePrefix(prefix.levels[: self.base.depth + 1]))
        return code if code != self.base_code else None

    def targets(self, prefix: TreePrefix, stage: int):
        if stage < self.appears_at or prefix.depth >= self.base.depth:
            return
        # Doubled extensions through the base depth; any that differs from
        # the base prefix is excluded.
        levels = [list(l) for l in prefix.levels]
        while len(levels) - 1 < self.base.depth:
            levels.append([ch for s in levels[-1] for ch in (s.child(0), s.child(1))])
        cand = TreePrefix(levels)
        if tree_prefix_code(cand) != self.base_code:
            yield cand

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "base_code": self.base_code.text(),
            "base_depth": self.base.depth,
            "appears_at": self.appears_at,
        }


class FinalWidthClass:
    """Rule-backed co-enumeration: excluded are the prefixes of depth at
    least ``d_min`` whose final level has width at least ``w_min``.  The
    surviving trees stay forever narrower, so any position escapes by
    doubling until the width threshold is crossed."""

    kind = "final-width"

    def __init__(self, w_min: int, d_min: int, appears_at: int = 0):
        self.w_min = w_min
        self.d_min = d_min
        self.appears_at = appears_at

    def code_is_excluded(self, code: BitString, stage: int) -> bool:
        if stage < self.appears_at:
            return False
        try:
            prefix = tree_prefix_decode(code)
        except Exception:
            return False
        return prefix.depth >= self.d_min and len(prefix.levels[-1]) >= self.w_min

    def covering_exclusion(
        self, prefix: TreePrefix, stage: int
    ) -> Optional[BitString]:
        if stage < self.appears_at:
            return None
        for d in range(self.d_min, prefix.depth + 1):
            if len(prefix.levels[d]) >= self.w_min:
                return tree_prefix_code(TreePrefix(prefix.levels[: d + 1]))
        return None

    def targets(self, prefix: TreePrefix, stage: int):
        if stage < self.appears_at:
            return
        levels = [list(l) for l in prefix.levels]
        while (
            len(levels) - 1 < max(self.d_min, prefix.depth + 1)
            or len(levels[-1]) < self.w_min
        ):
            levels.append([ch for s in levels[-1] for ch in (s.child(0), s.child(1))])
        yield TreePrefix(levels)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "w_min": self.w_min,
            "d_min": self.d_min,
            "appears_at": self.appears_at,
        }


class ExplicitClass:
    """A staged explicit exclusion list (the file-format presentation)."""

    kind = "explicit"

    def __init__(self, presentation: TreeClassPresentation):
        self.presentation = presentation

    def code_is_excluded(self, code: BitString, stage: int) -> bool:
        return code in set(self.presentation.exclusions_at(stage))

    def covering_exclusion(
        self, prefix: TreePrefix, stage: int
    ) -> Optional[BitString]:
        code = tree_prefix_code(prefix)
        for e in self.presentation.exclusions_at(stage):
            if e.is_prefix_of(code):
                return e
        return None

    def targets(self, prefix: TreePrefix, stage: int):
        my_code = tree_prefix_code(prefix)
        for e in sorted(self.presentation.exclusions_at(stage)):
            if my_code.is_prefix_of(e) and e != my_code:
                try:
                    yield tree_prefix_decode(e)
                except Exception:
                    continue

    def to_json(self) -> dict:
        return {"kind": self.kind, "exclusions": self.presentation.save()}


class StrategyFailure(RuntimeError):
    """Player 1 could not certify a class within the depth budget; possible
    at desk scale because the game is finite, and reported with the class
    index and position."""


@dataclass
class GameMove:
    player: int  # 1 or 2
    round_index: int
    prefix: TreePrefix


@dataclass
class Certificate:
    class_index: int
    stage: int
    excluded_code: BitString


@dataclass
class GameState:
    machine: ReferenceMachine
    c: int
    classes: list
    depth_budget: int
    lookahead: int = 2
    prefix: TreePrefix = field(default_factory=lambda: TreePrefix([[EMPTY]]))
    moves: list[GameMove] = field(default_factory=list)
    certificates: list[Certificate] = field(default_factory=list)


def new_game(machine, c, classes, depth_budget=12, lookahead=2) -> GameState:
    return GameState(
        machine=machine,
        c=c,
        classes=list(classes),
        depth_budget=depth_budget,
        lookahead=lookahead,
    )


def _doubled_extension(
    prefix: TreePrefix, c: int, machine: ReferenceMachine
) -> TreePrefix:
    nxt = []
    for s in prefix.levels[-1]:
        kids = [s.child(0), s.child(1)]
        if not all(survives(k, c, machine) for k in kids):
            raise StrategyFailure(
                f"cannot double leaf {s.text()!r} inside the survivor set"
            )
        nxt.extend(kids)
    return TreePrefix([list(l) for l in prefix.levels] + [nxt])


def _legal_extension(
    new: TreePrefix, old: TreePrefix, c: int, machine: ReferenceMachine
) -> bool:
    return (
        new.depth > old.depth
        and new.extends(old)
        and prefix_survives(new, c, machine)
    )


def opponent_move(state: GameState, stream: OracleStream) -> TreePrefix:
    """A seeded legal one-level extension: each leaf keeps one or both
    surviving children, chosen from the oracle stream."""
    nxt = []
    for s in state.prefix.levels[-1]:
        kids = [k for k in (s.child(0), s.child(1)) if survives(k, state.c, state.machine)]
        if not kids:
            raise StrategyFailure(f"opponent stuck under {s.text()!r}")
        if len(kids) == 2:
            pick = stream.draw(2)
            if pick == 3:
                nxt.extend(kids)
            else:
                nxt.append(kids[pick & 1])
        else:
            nxt.extend(kids)
    return TreePrefix([list(l) for l in state.prefix.levels] + [nxt])


def _first_level_doubles(new: TreePrefix, old: TreePrefix) -> bool:
    lvl = old.depth + 1
    children = set(new.levels[lvl])
    return all(
        s.child(0) in children and s.child(1) in children
        for s in old.levels[-1]
    )


def _continuations_available(
    prefix: TreePrefix, state: GameState
) -> bool:
    leaves = list(prefix.levels[-1])
    horizon = min(prefix.depth + state.lookahead, state.depth_budget)
    if horizon <= prefix.depth:
        return True
    try:
        density_extension_search(leaves, state.c, horizon, state.machine)
    except DensitySearchFailure:
        return False
    return True


def banach_mazur_round(
    state: GameState, opp: TreePrefix, class_index: int
) -> TreePrefix:
    """Player 1's reply: after the opponent's extension, extend so the
    basic open of the new prefix is disjoint from the stage survivors of
    the round's class, while doubling every previous leaf and staying in
    the survivor set.  Raises StrategyFailure with diagnostics when the
    depth budget runs out."""
    if not _legal_extension(opp, state.prefix, state.c, state.machine):
        raise TreeError("illegal opponent move")
    state.prefix = opp
    state.moves.append(GameMove(player=2, round_index=class_index, prefix=opp))
    cls = state.classes[class_index]
    stage = class_index
    base = state.prefix
    for _ in range(state.depth_budget - base.depth + 1):
        for target in cls.targets(base, stage):
            if target.depth > state.depth_budget:
                continue
            if not _legal_extension(target, state.prefix, state.c, state.machine):
                continue
            if not _first_level_doubles(target, state.prefix):
                continue
            if not _continuations_available(target, state):
                continue
            if cls.covering_exclusion(target, stage) is None:
                continue
            state.prefix = target
            state.moves.append(
                GameMove(player=1, round_index=class_index, prefix=target)
            )
            return target
        if base.depth >= state.depth_budget:
            break
        base = _doubled_extension(base, state.c, state.machine)
        cover = cls.covering_exclusion(base, stage)
        if cover is not None:
            if not _continuations_available(base, state):
                raise StrategyFailure(
                    f"class {class_index}: no surviving continuations above escape"
                )
            state.prefix = base
            state.moves.append(
                GameMove(player=1, round_index=class_index, prefix=base)
            )
            return base
    raise StrategyFailure(
        f"class {class_index}: no excluded extension within depth "
        f"{state.depth_budget} (position depth {state.prefix.depth})"
    )


def run_game(
    machine: ReferenceMachine,
    c: int,
    classes: Sequence,
    seed: int,
    depth_budget: int = 12,
) -> GameState:
    """Drive one full game: one round per presented class.  If the current
    position already extends an excluded prefix of the round's class, the
    certificate is recorded without moves; otherwise the opponent extends
    one seeded level and player 1 replies."""
    state = new_game(machine, c, classes, depth_budget)
    stream = OracleStream(seed)
    for idx, cls in enumerate(classes):
        cover = cls.covering_exclusion(state.prefix, idx)
        if cover is None:
            opp = opponent_move(state, stream)
            banach_mazur_round(state, opp, idx)
            cover = cls.covering_exclusion(state.prefix, idx)
            if cover is None:
                raise StrategyFailure(f"class {idx}: move did not certify")
        state.certificates.append(
            Certificate(class_index=idx, stage=idx, excluded_code=cover)
        )
    return state


def transcript_json(state: GameState) -> str:
    doc = {
        "c": state.c,
        "depth_budget": state.depth_budget,
        "final_prefix_code": tree_prefix_code(state.prefix).text(),
        "moves": [
            {
                "player": m.player,
                "round": m.round_index,
                "code": tree_prefix_code(m.prefix).text(),
            }
            for m in state.moves
        ],
        "certificates": [
            {
                "class": cert.class_index,
                "stage": cert.stage,
                "excluded_code": cert.excluded_code.text(),
            }
            for cert in state.certificates
        ],
        "classes": [cls.to_json() for cls in state.classes],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def verify_transcript(
    state: GameState, machine: ReferenceMachine
) -> tuple[bool, list[str]]:
    """Independent post-game verification: move legality and doubling,
    survivor membership of the final prefix, and one disjointness
    certificate per avoided class, checked against the class presentation
    and the final prefix by the basic-open membership test."""
    problems: list[str] = []
    final = state.prefix
    # Move chain legality and per-move leaf doubling by player 1.
    prev = TreePrefix([[EMPTY]])
    for m in state.moves:
        if not m.prefix.extends(prev) or m.prefix.depth <= prev.depth:
            problems.append(f"move at round {m.round_index} does not extend")
        if m.player == 1 and not _first_level_doubles(m.prefix, prev):
            problems.append(f"player-1 move at round {m.round_index} fails to double")
        prev = m.prefix
    if not basic_open_member(prev, final) or prev.levels != final.levels:
        problems.append("final prefix differs from the last move")
    for s in (x for level in final.levels for x in level):
        if not survives(s, state.c, machine):
            problems.append(f"final prefix string {s.text()!r} is compressed")
    if len(state.certificates) != len(state.classes):
        problems.append("missing certificates")
    for cert in state.certificates:
        cls = state.classes[cert.class_index]
        if not cls.code_is_excluded(cert.excluded_code, cert.stage):
            problems.append(f"class {cert.class_index}: code not excluded")
            continue
        try:
            excluded_prefix = tree_prefix_decode(cert.excluded_code)
        except Exception:
            problems.append(f"class {cert.class_index}: certificate undecodable")
            continue
        if not basic_open_member(excluded_prefix, final):
            problems.append(
                f"class {cert.class_index}: final prefix does not extend the "
                "excluded prefix"
            )
    return not problems, problems


def seeded_presentations(seed: int, count: int) -> list:
    """The seeded avoidance corpus: doubled-level and final-width rule
    classes with small entry depths.  Both kinds admit an escape above
    every position (the finite-stage counterpart of avoidability of thin
    classes), so a seeded game is winnable whenever the survivor
    constraint leaves room to double."""
    stream = OracleStream(seed)
    out = []
    for i in range(count):
        if i % 2:
            out.append(
                FinalWidthClass(
                    2 + stream.draw(3) % 7, 2 + stream.draw(2) % 3, appears_at=i
                )
            )
        else:
            out.append(DoubledLevelClass(2 + stream.draw(2) % 3, appears_at=i))
    return out
