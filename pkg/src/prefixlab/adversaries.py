"""Compression adversaries and test-family builders.

The two adversaries walk a bounded-use total functional, measure preimage
classes exactly over the 2^u oracle prefixes, and whenever a class measure
exceeds its certified threshold they buy a codeword from a KCL allocator
and register it on the reference machine, driving the measured class to
zero.  Registration is immediate, so the classical "wait for the universal
enumeration to catch up" step always completes in one step and every
constant is exact.

All measures are dyadic rationals computed from exact prefix counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .bits import (
    BitString,
    ClopenSet,
    DYADIC_ZERO,
    DyadicRational,
    MalformedCodeword,
    elias_gamma,
    gamma_nat,
    string_rank,
)
from .functionals import IntFunctional, TotalFunctional
from .kcl import KCLAllocator, KCLOverflow
from .machine import MachineSlot, ReferenceMachine, literal_cost
from .trees import TreeError

__all__ = [
    "AdversaryError",
    "ActionRecord",
    "AdversaryState",
    "run_deficiency_adversary",
    "run_threshold_adversary",
    "width_class_bound",
    "FamilyMember",
    "TestFamily",
    "solovay_to_difference",
    "build_ml_test",
    "width_deficiency_family",
    "tail_threshold",
    "TailCertificateError",
    "marker_sequence",
]


class AdversaryError(RuntimeError):
    """KCL overflow or another failure that the constructions rule out;
    reaching this on a total functional indicates a real bug."""


# ---------------------------------------------------------------------------
# Compiled per-level view of a functional against a machine state.


class _Levels:
    """Per-level tables: output ids per prefix, membership matrices, widths,
    and the current best description cost per output set."""

    def __init__(self, phi: TotalFunctional, machine: ReferenceMachine):
        self.phi = phi
        self.machine = machine
        self.use = phi.use
        self.n_levels = phi.levels
        self.member = [phi.member_matrix(n) for n in range(self.n_levels + 1)]
        self.member_int = [m.astype(np.int64) for m in self.member]
        self.widths = [phi.widths(n) for n in range(self.n_levels + 1)]
        self.width_by_prefix = [
            self.widths[n][phi.ids[n]] for n in range(self.n_levels + 1)
        ]
        # dhat[n][i] = deficiency of output set i at level n; empty sets get
        # a very small marker so they never obstruct membership in P^k.
        self._NEG = -(1 << 30)
        self.dhat = [self._level_dhat(n) for n in range(self.n_levels + 1)]

    def _level_dhat(self, n: int) -> np.ndarray:
        lit = literal_cost(n)
        out = np.empty(len(self.phi.outputs[n]), dtype=np.int64)
        for i, s in enumerate(self.phi.outputs[n]):
            if not s:
                out[i] = self._NEG
                continue
            best = lit
            for v in s:
                reg = self.machine.registered_best().get(BitString(n, v))
                if reg is not None and reg < best:
                    best = reg
            out[i] = n - best
        return out

    def note_compression(self, sigma: BitString, cost: int) -> None:
        """A new program of the given total length produces sigma; update
        the deficiency of every output set containing it."""
        n = sigma.n
        if n > self.n_levels:
            return
        d = n - cost
        contains = self.member[n][:, sigma.v]
        np.maximum(self.dhat[n], np.where(contains, d, self._NEG), out=self.dhat[n])

    def p_mask(self, k: int, level_bound: Optional[int] = None) -> np.ndarray:
        """Indicator over oracle prefixes of: every level up to the bound
        has output deficiency <= k."""
        lb = self.n_levels if level_bound is None else min(level_bound, self.n_levels)
        mask = np.ones(1 << self.use, dtype=bool)
        for n in range(lb + 1):
            mask &= self.dhat[n][self.phi.ids[n]] <= k
        return mask

    def g_mask(self, theta: IntFunctional) -> np.ndarray:
        """Indicator of: every level's output deficiency is at most the
        threshold functional's value there."""
        mask = np.ones(1 << self.use, dtype=bool)
        for n in range(self.n_levels + 1):
            mask &= self.dhat[n][self.phi.ids[n]] <= theta.tables[n]
        return mask

    def counts_by_sigma(self, mask: np.ndarray, n: int) -> np.ndarray:
        """For every sigma in 2^n, the number of prefixes in ``mask`` whose
        level-n output contains sigma."""
        per_set = np.bincount(
            self.phi.ids[n][mask], minlength=len(self.phi.outputs[n])
        )
        return self.member_int[n].T @ per_set


def _exceeds(count: int, exponent: int, use: int) -> bool:
    """count / 2^use > 2^exponent, exactly."""
    e = exponent + use
    return count > (1 << e) if e >= 0 else count >= 1


def _at_most(count: int, exponent: int, use: int) -> bool:
    """count / 2^use <= 2^exponent, exactly."""
    e = exponent + use
    return count <= (1 << e) if e >= 0 else count == 0


@dataclass
class ActionRecord:
    stage: int
    sigma: BitString
    index: int  # the deficiency target k, or the threshold value p
    codeword: BitString
    measure_before: DyadicRational
    measure_after: DyadicRational
    removed: np.ndarray  # prefix mask of the class removed by this action

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "sigma": self.sigma.text(),
            "k_or_p": self.index,
            "codeword": self.codeword.text(),
            "measure_before": str(self.measure_before),
            "measure_after": str(self.measure_after),
        }


@dataclass
class BoundRow:
    sigma: BitString
    index: int
    measure: DyadicRational
    bound: DyadicRational
    ok: bool

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma.text(),
            "k_or_p": self.index,
            "measure": str(self.measure),
            "bound": str(self.bound),
            "ok": self.ok,
        }


@dataclass
class AdversaryState:
    kind: str
    machine: ReferenceMachine
    slot: MachineSlot
    allocator: KCLAllocator
    levels: "_Levels"
    log: list[ActionRecord] = field(default_factory=list)
    converged: bool = False
    k_max: int = 0
    theta: Optional[IntFunctional] = None

    @property
    def constant(self) -> int:
        return self.slot.constant

    def weight(self) -> DyadicRational:
        return self.allocator.weight()

    def log_json(self) -> str:
        return json.dumps(
            [a.to_json() for a in self.log], sort_keys=True, separators=(",", ":")
        )


def run_deficiency_adversary(
    phi: TotalFunctional,
    k_max: int,
    stage_budget: int,
    machine: ReferenceMachine,
    slot: Optional[MachineSlot] = None,
) -> AdversaryState:
    """Stage loop: whenever the class of oracles that keep all output
    deficiencies at most k while producing sigma has measure above
    2^(cost(k)+k+1+c-|sigma|), compress sigma to deficiency k+1 via a KCL
    codeword of length |sigma|-k-1-c.  Acts on the least (sigma, k) in
    length-lex-then-k order, one action per stage, exactly one scan range
    per stage (sigma in 2^<=s, k <= s).
    """
    if slot is None:
        slot = machine.open_slot()
    c = slot.constant
    lv = _Levels(phi, machine)
    alloc = KCLAllocator()
    state = AdversaryState(
        kind="deficiency",
        machine=machine,
        slot=slot,
        allocator=alloc,
        levels=lv,
        k_max=k_max,
    )
    L = lv.n_levels
    for stage in range(1, stage_budget + 1):
        len_bound = min(stage, L)
        k_bound = min(stage, k_max)
        hit = _least_deficiency_violation(lv, c, len_bound, k_bound, stage)
        if hit is None:
            if len_bound == L and k_bound == k_max:
                state.converged = True
                break
            continue
        n, sigma_v, k, count, mask = hit
        sigma = BitString(n, sigma_v)
        length = n - k - 1 - c
        try:
            codeword = alloc.request(length, sigma)
        except KCLOverflow as exc:  # pragma: no cover - ruled out by the bound
            raise AdversaryError(
                f"KCL overflow compressing {sigma.text()!r} at k={k}: {exc}"
            ) from exc
        slot.add(codeword, sigma)
        lv.note_compression(sigma, length + c)
        removed = mask & lv.member[n][:, sigma_v][phi.ids[n]]
        after = lv.counts_by_sigma(lv.p_mask(k, len_bound), n)[sigma_v]
        state.log.append(
            ActionRecord(
                stage=stage,
                sigma=sigma,
                index=k,
                codeword=codeword,
                measure_before=DyadicRational(int(count), lv.use),
                measure_after=DyadicRational(int(after), lv.use),
                removed=removed,
            )
        )
    return state


def _least_deficiency_violation(lv, c, len_bound, k_bound, stage):
    masks = [lv.p_mask(k, len_bound) for k in range(k_bound + 1)]
    for n in range(0, len_bound + 1):
        viol = np.zeros((k_bound + 1, 1 << n), dtype=bool)
        counts = np.zeros((k_bound + 1, 1 << n), dtype=np.int64)
        for k in range(k_bound + 1):
            cnt = lv.counts_by_sigma(masks[k], n)
            counts[k] = cnt
            e = lv.machine.k_hat_nat(k) + k + 1 + c - n + lv.use
            if e >= 0:
                viol[k] = cnt > (1 << e)
            else:
                viol[k] = cnt >= 1
        any_v = viol.any(axis=0)
        if any_v.any():
            sigma_v = int(np.argmax(any_v))
            k = int(np.argmax(viol[:, sigma_v]))
            return n, sigma_v, k, int(counts[k, sigma_v]), masks[k]
    return None


def deficiency_bound_report(state: AdversaryState) -> list[BoundRow]:
    """Exact final bounds mu(P^k_sigma) <= 2^(cost(k)+k+1+c-|sigma|) for
    every sigma up to the functional's level bound and k <= k_max."""
    lv = state.levels
    c = state.constant
    rows = []
    for k in range(state.k_max + 1):
        mask = lv.p_mask(k)
        e_base = state.machine.k_hat_nat(k) + k + 1 + c
        for n in range(lv.n_levels + 1):
            cnt = lv.counts_by_sigma(mask, n)
            bound = DyadicRational.pow2(e_base - n)
            for sigma_v in range(1 << n):
                count = int(cnt[sigma_v])
                rows.append(
                    BoundRow(
                        sigma=BitString(n, sigma_v),
                        index=k,
                        measure=DyadicRational(count, lv.use),
                        bound=bound,
                        ok=_at_most(count, e_base - n, lv.use),
                    )
                )
    return rows


def deficiency_weight_bound(state: AdversaryState) -> DyadicRational:
    """The certified cap on the adversary's codebook weight: the sum of
    2^-cost(k) over the targeted deficiency levels, at the final state."""
    total = DYADIC_ZERO
    for k in range(state.k_max + 1):
        total = total + DyadicRational.pow2(-state.machine.k_hat_nat(k))
    return total


def removed_sets_disjoint(state: AdversaryState) -> bool:
    """Distinct actions at the same deficiency level remove disjoint
    oracle classes; checked exactly on the recorded masks."""
    by_k: dict[int, list[np.ndarray]] = {}
    for rec in state.log:
        by_k.setdefault(rec.index, []).append(rec.removed)
    for masks in by_k.values():
        for i in range(len(masks)):
            for j in range(i + 1, len(masks)):
                if (masks[i] & masks[j]).any():
                    return False
    return True


def run_threshold_adversary(
    phi: TotalFunctional,
    theta: IntFunctional,
    round_budget: int,
    machine: ReferenceMachine,
    slot: Optional[MachineSlot] = None,
) -> AdversaryState:
    """Round loop of the threshold adversary: search for n, p <= n-c-2 and
    sigma in 2^n whose class {theta(x;n)=p, sigma produced, all levels
    within threshold} has measure above 2^(c+2+p-n); compress sigma to
    deficiency p+1 (codeword length n-p-c-1).  The wait for the reference
    cost to absorb the new description completes immediately, since
    registration is explicit.
    """
    if theta.use != phi.use or theta.levels < phi.levels:
        raise ValueError("threshold functional must cover the same table")
    if slot is None:
        slot = machine.open_slot()
    c = slot.constant
    lv = _Levels(phi, machine)
    alloc = KCLAllocator()
    state = AdversaryState(
        kind="threshold",
        machine=machine,
        slot=slot,
        allocator=alloc,
        levels=lv,
        theta=theta,
    )
    for rnd in range(1, round_budget + 1):
        hit = _least_threshold_violation(lv, theta, c)
        if hit is None:
            state.converged = True
            break
        n, p, sigma_v, count, mask = hit
        sigma = BitString(n, sigma_v)
        length = n - p - c - 1
        try:
            codeword = alloc.request(length, sigma)
        except KCLOverflow as exc:  # pragma: no cover
            raise AdversaryError(
                f"KCL overflow compressing {sigma.text()!r} at p={p}: {exc}"
            ) from exc
        slot.add(codeword, sigma)
        lv.note_compression(sigma, length + c)
        removed = mask & lv.member[n][:, sigma_v][phi.ids[n]]
        sel = lv.g_mask(theta) & (theta.tables[n] == p)
        after = lv.counts_by_sigma(sel, n)[sigma_v]
        state.log.append(
            ActionRecord(
                stage=rnd,
                sigma=sigma,
                index=p,
                codeword=codeword,
                measure_before=DyadicRational(int(count), lv.use),
                measure_after=DyadicRational(int(after), lv.use),
                removed=removed,
            )
        )
    return state


def _least_threshold_violation(lv, theta, c):
    g = lv.g_mask(theta)
    for n in range(lv.n_levels + 1):
        p_hi = n - c - 2
        if p_hi < 0:
            continue
        for p in range(p_hi + 1):
            sel = g & (theta.tables[n] == p)
            if not sel.any():
                continue
            cnt = lv.counts_by_sigma(sel, n)
            e = c + 2 + p - n + lv.use
            viol = cnt > (1 << e) if e >= 0 else cnt >= 1
            if viol.any():
                sigma_v = int(np.argmax(viol))
                return n, p, sigma_v, int(cnt[sigma_v]), sel
    return None


def threshold_bound_report(
    state: AdversaryState, p_max: Optional[int] = None
) -> list[BoundRow]:
    """Final bounds mu(Q^p_sigma cap G) <= 2^((c+2)+p-|sigma|).  The
    statement constant is the branch constant plus the 2 bits the search
    threshold carries; above p = n-c-2 the bound exceeds 1 and is vacuous.
    """
    lv = state.levels
    theta = state.theta
    c = state.constant
    g = lv.g_mask(theta)
    rows = []
    for n in range(lv.n_levels + 1):
        hi = n if p_max is None else min(p_max, n)
        for p in range(hi + 1):
            sel = g & (theta.tables[n] == p)
            cnt = lv.counts_by_sigma(sel, n)
            e = c + 2 + p - n
            bound = DyadicRational.pow2(e)
            for sigma_v in range(1 << n):
                count = int(cnt[sigma_v])
                rows.append(
                    BoundRow(
                        sigma=BitString(n, sigma_v),
                        index=p,
                        measure=DyadicRational(count, lv.use),
                        bound=bound,
                        ok=_at_most(count, e, lv.use),
                    )
                )
    return rows


def threshold_weight_bound(state: AdversaryState) -> DyadicRational:
    """1/2 + mu(G)/2 evaluated at the final state; the adversary's total
    added weight never exceeds it (each purchase is matched by a measure
    drop of twice its cost, and immediate registration leaves no unpaid
    final round)."""
    g = state.levels.g_mask(state.theta)
    mu_g = DyadicRational(int(g.sum()), state.levels.use)
    return DyadicRational(1, 1) + mu_g.halve()


def width_class_bound(
    state: AdversaryState, k0: int, n: int, m: int
) -> tuple[DyadicRational, DyadicRational, bool]:
    """Measure of the oracles that keep deficiencies <= k0 yet produce a
    level-n output of width >= 2^m, against the certified 2^(c0 - m).

    Each such oracle lies in at least 2^m of the per-sigma classes, whose
    measures the converged deficiency adversary has capped; c0 is the
    adversary's certificate constant cost(k0)+k0+1+c.
    """
    if state.kind != "deficiency" or k0 > state.k_max:
        raise ValueError("needs a deficiency adversary run covering k0")
    lv = state.levels
    c0 = state.machine.k_hat_nat(k0) + k0 + 1 + state.constant
    mask = lv.p_mask(k0) & (lv.width_by_prefix[n] >= (1 << m))
    count = int(mask.sum())
    measure = DyadicRational(count, lv.use)
    bound = DyadicRational.pow2(c0 - m)
    return measure, bound, _at_most(count, c0 - m, lv.use)


# ---------------------------------------------------------------------------
# Test families.


@dataclass
class FamilyMember:
    index: int
    clopen: ClopenSet
    measure: DyadicRational
    bound: DyadicRational
    ok: bool

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "generators": [g.text() for g in self.clopen.gens],
            "measure": str(self.measure),
            "bound": str(self.bound),
            "ok": self.ok,
        }


@dataclass
class TestFamily:
    kind: str  # "solovay" | "difference" | "martin-lof"
    members: list[FamilyMember]
    markers: Optional[list[int]] = None

    def all_ok(self) -> bool:
        return all(m.ok for m in self.members)

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "members": [m.to_json() for m in self.members],
        }
        if self.markers is not None:
            doc["markers"] = self.markers
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def solovay_to_difference(
    p_set: ClopenSet, u_sets: Sequence[ClopenSet], i_max: Optional[int] = None
) -> TestFamily:
    """Convert a finite difference-Solovay family into a difference test:
    V_i collects the points lying in more than 2^(i+1) of the U_j.  The
    exact Markov bound mu(P cap V_i) <= (sum_j mu(P cap U_j)) / 2^(i+1)
    is verified member by member.
    """
    depth = max([p_set.max_depth()] + [u.max_depth() for u in u_sets])
    counts = np.zeros(1 << depth, dtype=np.int64)
    for u in u_sets:
        counts += u.indicator(depth)
    p_ind = p_set.indicator(depth)
    total = DYADIC_ZERO
    for u in u_sets:
        total = total + p_set.intersection(u).measure()
    if i_max is None:
        i_max = max(int(counts.max()), 1).bit_length()
    members = []
    for i in range(i_max + 1):
        v_ind = counts > (1 << (i + 1))
        v_set = ClopenSet.from_indicator(v_ind)
        inter = int((v_ind & p_ind).sum())
        measure = DyadicRational(inter, depth)
        bound = total.shift(-(i + 1))
        members.append(
            FamilyMember(
                index=i,
                clopen=v_set,
                measure=measure,
                bound=bound,
                ok=measure <= bound,
            )
        )
    return TestFamily(kind="difference", members=members)


def build_ml_test(
    state: AdversaryState,
    markers: Sequence[int],
    horizon: int,
    k0: int,
) -> TestFamily:
    """Martin-Lof test from a converged deficiency adversary: member s is
    the union of the width-explosion classes for the levels i <= s whose
    marker is at least the stage marker n_s.

    The width threshold at level i is 2^(n_i + c0), with c0 the adversary
    certificate constant: the shift folds the certificate constant into
    the marker so that mu(V_s) <= 2^(1 - n_s) holds exactly.
    """
    if len(set(markers)) != len(markers):
        raise ValueError("markers must be injective")
    if state.kind != "deficiency" or k0 > state.k_max:
        raise ValueError("needs a deficiency adversary run covering k0")
    lv = state.levels
    c0 = state.machine.k_hat_nat(k0) + k0 + 1 + state.constant
    p_mask = lv.p_mask(k0)
    g_star = []
    for i in range(min(horizon, len(markers) - 1, lv.n_levels) + 1):
        need = markers[i] + c0
        if need >= 63:
            g_star.append(np.zeros(1 << lv.use, dtype=bool))
        else:
            g_star.append(p_mask & (lv.width_by_prefix[i] >= (1 << need)))
    members = []
    for s in range(min(horizon, len(markers) - 1) + 1):
        v = np.zeros(1 << lv.use, dtype=bool)
        for i in range(min(s, len(g_star) - 1) + 1):
            if markers[i] >= markers[s]:
                v |= g_star[i]
        count = int(v.sum())
        measure = DyadicRational(count, lv.use)
        bound = DyadicRational.pow2(1 - markers[s])
        members.append(
            FamilyMember(
                index=s,
                clopen=ClopenSet.from_indicator(v),
                measure=measure,
                bound=bound,
                ok=_at_most(count, 1 - markers[s], lv.use),
            )
        )
    return TestFamily(kind="martin-lof", members=members, markers=list(markers))


class TailCertificateError(ValueError):
    """The order table is too short to certify the requested tail."""


def tail_threshold(
    g_table: Sequence[int],
    n: int,
    c: int,
    tail_bound: DyadicRational,
) -> int:
    """Least k such that sum_{i>=k} 2^-g(i) < 2^-(n+c), computed from the
    exact partial sums of the table plus a certified upper bound on the
    remainder past the table's end."""
    target = DyadicRational.pow2(-(n + c))
    suffix = tail_bound
    sums = [suffix]
    for i in range(len(g_table) - 1, -1, -1):
        suffix = suffix + DyadicRational.pow2(-g_table[i])
        sums.append(suffix)
    sums.reverse()  # sums[k] = certified sum_{i>=k}, k = 0..len(g_table)
    for k, s in enumerate(sums[: len(g_table) + 1]):
        if s < target:
            if k > len(g_table):
                break
            return k
    raise TailCertificateError(
        f"table of length {len(g_table)} cannot certify tail below {target}"
    )


def identity_tail_bound(table_len: int) -> DyadicRational:
    """Exact remainder of sum 2^-i past a table of g(i) = i on 0..len-1."""
    return DyadicRational.pow2(-(table_len - 1))


def width_deficiency_family(
    phi: TotalFunctional,
    machine: ReferenceMachine,
    mode: str,
    *,
    psi: Optional[IntFunctional] = None,
    h_table: Optional[Sequence[int]] = None,
    w_table: Optional[Sequence[int]] = None,
    g_table: Optional[Sequence[int]] = None,
    tail_bound: Optional[DyadicRational] = None,
    round_budget: int = 4096,
) -> tuple[TestFamily, AdversaryState]:
    """Width-deficiency test families, one per theorem flavour.

    mode "computable-h":    members (n, p), membership = threshold order
        psi >= p and width >= 2^(psi+h(n)); bound 2^((c+2)-p).
    mode "computable-width": members (n, p) for p <= floor(log2 w(n)),
        membership = psi >= p and width == w(n); bound 2^((c+3)-p) (the
        extra bit pays for the spread of threshold values below the cap).
    mode "tail-sum":        members (n, k), E_n^k unions the classes with
        floor(log2 width) = p over p >= h(k); bound 2^-k, strict.

    Runs its own threshold adversary to convergence first; the returned
    family's bounds are certified by that run.
    """
    use = phi.use
    size = 1 << use
    L = phi.levels
    if mode == "computable-h":
        if psi is None or h_table is None:
            raise ValueError("computable-h mode needs psi and h_table")
        theta = IntFunctional(
            use, [np.full(size, h_table[n], dtype=np.int64) for n in range(L + 1)]
        )
    elif mode == "computable-width":
        if psi is None or w_table is None:
            raise ValueError("computable-width mode needs psi and w_table")
        tables = []
        for n in range(L + 1):
            if w_table[n] < 1:
                raise ValueError("width table entries must be >= 1")
            lw = w_table[n].bit_length() - 1
            tables.append(np.maximum(lw - psi.tables[n], 0))
        theta = IntFunctional(use, tables)
    elif mode == "tail-sum":
        if g_table is None or tail_bound is None:
            raise ValueError("tail-sum mode needs g_table and tail_bound")
        if len(g_table) <= L:
            raise ValueError("g_table must cover all output log-widths")
        for q in range(L + 1):
            if g_table[q] > q:
                raise ValueError("tail-sum mode needs g(q) <= q on the range")
        tables = []
        for n in range(L + 1):
            theta_by_set = np.array(
                [
                    max(0, (len(s).bit_length() - 1) - g_table[len(s).bit_length() - 1])
                    if s
                    else 0
                    for s in phi.outputs[n]
                ],
                dtype=np.int64,
            )
            tables.append(theta_by_set[phi.ids[n]])
        theta = IntFunctional(use, tables)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    adv = run_threshold_adversary(phi, theta, round_budget, machine)
    if not adv.converged:
        raise AdversaryError("threshold adversary did not converge in budget")
    lv = adv.levels
    c = adv.constant
    g = lv.g_mask(theta)
    members = []
    if mode == "computable-h":
        for n in range(L + 1):
            w = lv.width_by_prefix[n]
            need = psi.tables[n] + h_table[n]
            wide = np.where(need < 63, w >= np.int64(1) << np.minimum(need, 62), False)
            for p in range(n + 1):
                sel = g & (psi.tables[n] >= p) & wide
                count = int(sel.sum())
                e = (c + 2) - p
                members.append(
                    FamilyMember(
                        index=(n << 8) | p,
                        clopen=ClopenSet.from_indicator(sel),
                        measure=DyadicRational(count, use),
                        bound=DyadicRational.pow2(e),
                        ok=_at_most(count, e, use),
                    )
                )
    elif mode == "computable-width":
        for n in range(L + 1):
            w = lv.width_by_prefix[n]
            lw = w_table[n].bit_length() - 1
            for p in range(lw + 1):
                sel = g & (psi.tables[n] >= p) & (w == w_table[n])
                count = int(sel.sum())
                e = (c + 3) - p
                members.append(
                    FamilyMember(
                        index=(n << 8) | p,
                        clopen=ClopenSet.from_indicator(sel),
                        measure=DyadicRational(count, use),
                        bound=DyadicRational.pow2(e),
                        ok=_at_most(count, e, use),
                    )
                )
    else:  # tail-sum
        for n in range(L + 1):
            fl_by_set = np.array(
                [len(s).bit_length() - 1 if s else -1 for s in phi.outputs[n]],
                dtype=np.int64,
            )
            fl = fl_by_set[phi.ids[n]]
            for k in range(n + 1):
                h_k = tail_threshold(list(g_table), k, c + 2, tail_bound)
                sel = g & (fl >= h_k)
                count = int(sel.sum())
                measure = DyadicRational(count, use)
                bound = DyadicRational.pow2(-k)
                members.append(
                    FamilyMember(
                        index=(n << 8) | k,
                        clopen=ClopenSet.from_indicator(sel),
                        measure=measure,
                        bound=bound,
                        ok=measure < bound,
                    )
                )
    kind = {"computable-h": "solovay", "computable-width": "solovay", "tail-sum": "solovay"}
    return TestFamily(kind=kind[mode], members=members), adv


def marker_sequence(
    source: str,
    machine: Optional[ReferenceMachine] = None,
    count: int = 50,
    text: Optional[str] = None,
    max_program_len: int = 24,
) -> list[int]:
    """An injective marker sequence.

    "builtin": the first-appearance order of outputs when the reference
    machine's program space is decoded in length-then-value order (a
    computable stand-in for an enumeration of the halting set); each output
    contributes its length-lex rank, once.  "file": an explicit sequence,
    with repetitions rejected.
    """
    if source == "file":
        if text is None:
            raise ValueError("file mode needs the sequence text")
        vals = [int(tok) for tok in text.split()]
        if len(set(vals)) != len(vals):
            raise ValueError("marker sequence has repetitions")
        return vals
    if source != "builtin":
        raise ValueError(f"unknown marker source {source!r}")
    if machine is None:
        raise ValueError("builtin mode needs a machine")
    seen: set[int] = set()
    out: list[int] = []
    # Structural enumeration in (length, value) program order: for each
    # program length, literal programs come interleaved with registered
    # ones by their leading bits; value order puts the literal branch (bit
    # 0) first.
    for plen in range(1, max_program_len + 1):
        emitted: list[tuple[int, BitString]] = []
        lit_len = None
        for length in range(plen):
            if literal_cost(length) == plen:
                lit_len = length
                break
        if lit_len is not None:
            prefix = BitString(1, 0).concat(gamma_nat(lit_len))
            for v in range(1 << lit_len):
                emitted.append(
                    (prefix.concat(BitString(lit_len, v)).v, BitString(lit_len, v))
                )
        for blk, out_s in machine.programs():
            if blk.n == plen:
                emitted.append((blk.v, out_s))
        emitted.sort(key=lambda t: t[0])
        for _, s in emitted:
            r = string_rank(s)
            if r not in seen:
                seen.add(r)
                out.append(r)
                if len(out) == count:
                    return out
    return out
