"""Staged base sequences, their shifts, and the anti-diagonal interleaving.

A base sequence for an excluded index ``i`` is built over the re-indexed
family ``beta_1, beta_2, ... = alpha_j (j != i)``.  Stage ``j`` has tolerance
``eps_j = 1/(2(j+1)^2)`` and collects every integer of its window that
approximates ``beta_1 .. beta_j`` within ``eps_j``.  The window is grown by
doubling until it holds at least one such integer and, for every divisor
``r`` in ``2 .. max(j, k_max)``, one that ``r`` does not divide.  Windows
tile the positive integers: stage ``j`` covers ``[N_j, N_{j+1} - 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .angle import Outcome, PrecReal, dist_to_int, is_less
from .errors import BoxTooLarge, InsufficientBaseTerms, WindowBudgetExceeded
from .family import AlphaFamily
from .search import DEFAULT_BOX_BUDGET, SearchWindow, box_search, simultaneous_hits

DEFAULT_WINDOW_BUDGET = 1 << 34


def stage_eps(j: int) -> Fraction:
    if j < 1:
        raise ValueError("stage index must be >= 1")
    return Fraction(1, 2 * (j + 1) ** 2)


def default_k_policy(n: int) -> int:
    """``K_n = (n+1) * ceil(1/eps_n) = (n+1) * 2(n+1)^2``."""
    return (n + 1) * math.ceil(1 / stage_eps(n))


def reindexed(excluded: int | None, count: int) -> list[int]:
    """The first ``count`` family indices other than ``excluded``."""
    out, t = [], 1
    while len(out) < count:
        if t != excluded:
            out.append(t)
        t += 1
    return out


@dataclass(frozen=True)
class StageConstants:
    eps: Fraction
    K: int
    v: PrecReal | None
    v_argmin: tuple[int, ...] | None = None
    v_status: str = "ok"


def stage_constants(
    j: int,
    family: AlphaFamily,
    k_policy: Callable[[int], int] = default_k_policy,
    *,
    excluded: int | None = None,
    box_budget: int = DEFAULT_BOX_BUDGET,
    compute_v: bool = True,
) -> StageConstants:
    """``eps_j``, ``K_j`` and ``v_j = (1/j) * box infimum`` over the ``K_{j+1}`` box
    on the first ``j+1`` (re-indexed) family members.

    Raises :class:`BoxTooLarge` when the box exceeds ``box_budget``.
    """
    eps = stage_eps(j)
    K = k_policy(j)
    if not compute_v:
        return StageConstants(eps, K, None, None, "skipped")
    res = box_search(family, reindexed(excluded, j + 1), k_policy(j + 1), budget=box_budget)
    v = res.value
    # (1/j) * ball: exact when j is a power of two, else enclose
    if j & (j - 1) == 0:
        v = v.mul_pow2(-(j.bit_length() - 1))
    else:
        v = PrecReal.from_bounds(v.lower / j, v.upper / j, 96)
    return StageConstants(eps, K, v, res.argmin)


@dataclass
class Stage:
    j: int
    eps: Fraction
    indices: list[int]  # original family indices approximated in this stage
    window: SearchWindow
    terms: list[int]
    divisor_witnesses: dict[int, int]
    K: int
    v: PrecReal | None = None
    v_status: str = "ok"


@dataclass
class BaseSequence:
    excluded: int
    stages: list[Stage] = field(default_factory=list)

    @property
    def terms(self) -> list[int]:
        return [m for st in self.stages for m in st.terms]

    def tagged(self) -> list[tuple[int, int]]:
        """``(term, stage)`` pairs in ascending order."""
        return [(m, st.j) for st in self.stages for m in st.terms]

    @property
    def boundaries(self) -> list[int]:
        """``N_j``: the first integer of each stage window."""
        return [st.window.lo for st in self.stages]

    def stage_start(self, j: int) -> int:
        """Number of terms before stage ``j`` (a position threshold)."""
        return sum(len(st.terms) for st in self.stages if st.j < j)

    def shift(self) -> int:
        """Positions dropped by the shift ``s~_n = s_{n + P}``: everything before stage ``i``."""
        j = min(self.excluded, len(self.stages))
        return self.stage_start(j)

    def shifted(self) -> list[tuple[int, int]]:
        return self.tagged()[self.shift() :]


def _witnesses_complete(hits: Sequence[int], divisors: Sequence[int], found: dict[int, int]) -> bool:
    for r in divisors:
        if r not in found:
            for m in hits:
                if m % r:
                    found[r] = m
                    break
    return all(r in found for r in divisors)


def build_base_sequence(
    family: AlphaFamily,
    excluded: int,
    num_stages: int,
    *,
    k_max: int = 6,
    min_shifted_terms: int = 0,
    window_budget: int = DEFAULT_WINDOW_BUDGET,
    k_policy: Callable[[int], int] = default_k_policy,
    box_budget: int = DEFAULT_BOX_BUDGET,
    compute_v: bool = True,
    threads: int = 1,
) -> BaseSequence:
    """Staged construction for one excluded index.

    The final stage keeps doubling its window until the shifted sequence has
    ``min_shifted_terms`` terms, so that the interleaving can be fed.
    """
    base = BaseSequence(excluded)
    lo = 1
    for j in range(1, num_stages + 1):
        eps = stage_eps(j)
        idx = reindexed(excluded, j)
        divisors = list(range(2, max(j, k_max) + 1))
        hi = max(2 * lo, lo + 1)
        scanned = lo - 1
        hits: list[int] = []
        found: dict[int, int] = {}
        while True:
            if hi > window_budget:
                raise WindowBudgetExceeded(
                    f"stage {j} of base {excluded} needs a window beyond {window_budget}",
                    operation="sequence.build_base_sequence",
                    stage=j,
                    excluded=excluded,
                )
            new = simultaneous_hits(family, idx, eps, SearchWindow(scanned + 1, hi), threads=threads).hits
            hits.extend(new)
            scanned = hi
            done = bool(hits) and _witnesses_complete(hits, divisors, found)
            if done and j == num_stages:
                before = base.stage_start(min(excluded, num_stages))
                have = sum(len(st.terms) for st in base.stages) + len(hits) - before
                done = have >= min_shifted_terms
            if done:
                break
            hi *= 2
        try:
            consts = stage_constants(j, family, k_policy, excluded=excluded, box_budget=box_budget, compute_v=compute_v)
            v, status = consts.v, consts.v_status
        except BoxTooLarge:
            v, status = None, "box_too_large"
        base.stages.append(
            Stage(j, eps, idx, SearchWindow(lo, hi), hits, {r: found[r] for r in divisors}, k_policy(j), v, status)
        )
        lo = hi + 1
    return base


# interleaving -------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    m: int
    source: int  # excluded index i of the base sequence
    position: int  # 1-based position in the shifted sequence
    stage: int


@dataclass
class RigiditySequence:
    terms: list[Term]
    bases: list[BaseSequence] = field(default_factory=list)

    def __len__(self):
        return len(self.terms)

    @property
    def values(self) -> list[int]:
        return [t.m for t in self.terms]

    def increasing_view(self) -> list[int]:
        """Strictly increasing, de-duplicated terms."""
        return sorted(set(self.values))

    def provenance(self) -> list[tuple[int, int]]:
        return [(t.source, t.position) for t in self.terms]

    def super_stages(self) -> dict[int, list[int]]:
        """Stage ``j`` -> 1-based enumeration indices whose term comes from stage ``j``."""
        out: dict[int, list[int]] = {}
        for n, t in enumerate(self.terms, start=1):
            out.setdefault(t.stage, []).append(n)
        return out

    def completed_super_stages(self) -> list[int]:
        """Stages whose terms, for every contributing base, are all in the prefix."""
        done = []
        counts: dict[tuple[int, int], int] = {}
        for t in self.terms:
            counts[(t.source, t.stage)] = counts.get((t.source, t.stage), 0) + 1
        stages = sorted({t.stage for t in self.terms})
        for j in stages:
            ok = True
            for b in self.bases:
                avail = sum(1 for _, s in b.shifted() if s == j)
                if avail and counts.get((b.excluded, j), 0) < avail:
                    ok = False
            if ok:
                done.append(j)
        return done


def diagonal_order(num_bases: int, total: int) -> list[tuple[int, int]]:
    """``(source, position)`` pairs along anti-diagonals, source ascending within each."""
    out: list[tuple[int, int]] = []
    d = 2
    while len(out) < total:
        for i in range(1, min(num_bases, d - 1) + 1):
            out.append((i, d - i))
            if len(out) == total:
                break
        d += 1
    return out


def required_positions(num_bases: int, total: int) -> dict[int, int]:
    need = {i: 0 for i in range(1, num_bases + 1)}
    for i, n in diagonal_order(num_bases, total):
        need[i] = max(need[i], n)
    return need


def interleave(bases: Sequence[BaseSequence], total: int) -> RigiditySequence:
    """Enumerate ``s~^(1)_1, s~^(1)_2, s~^(2)_1, s~^(1)_3, ...`` over the given bases.

    The k-th base in ``bases`` plays the role of source ``k``.
    """
    shifted = [b.shifted() for b in bases]
    terms = []
    for i, n in diagonal_order(len(bases), total):
        seq = shifted[i - 1]
        if n > len(seq):
            raise InsufficientBaseTerms(
                f"base {bases[i - 1].excluded} has only {len(seq)} shifted terms, position {n} requested",
                operation="sequence.interleave",
                base=bases[i - 1].excluded,
            )
        m, stage = seq[n - 1]
        terms.append(Term(m, bases[i - 1].excluded, n, stage))
    return RigiditySequence(terms, list(bases))


def build_sequence(
    family: AlphaFamily,
    num_stages: int,
    num_bases: int,
    total: int,
    *,
    k_max: int = 6,
    window_budget: int = DEFAULT_WINDOW_BUDGET,
    k_policy: Callable[[int], int] = default_k_policy,
    box_budget: int = DEFAULT_BOX_BUDGET,
    compute_v: bool = True,
    threads: int = 1,
) -> RigiditySequence:
    """Base sequences for excluded indices ``1 .. num_bases`` and their interleaving."""
    if num_stages == 0 or total == 0:
        return RigiditySequence([], [])
    need = required_positions(num_bases, total)
    bases = [
        build_base_sequence(
            family,
            i,
            num_stages,
            k_max=k_max,
            min_shifted_terms=need[i],
            window_budget=window_budget,
            k_policy=k_policy,
            box_budget=box_budget,
            compute_v=compute_v,
            threads=threads,
        )
        for i in range(1, num_bases + 1)
    ]
    return interleave(bases, total)


# checks on the built prefix ----------------------------------------------


def term_distance(family: AlphaFamily, m: int, i: int, digits: int = 40) -> PrecReal:
    """Certified ``||m alpha_i||``."""
    return dist_to_int(family.alpha(i, digits) * m)


def _certified_small(family: AlphaFamily, m: int, i: int, eps: Fraction, digits: int = 40) -> Outcome:
    out = is_less(term_distance(family, m, i, digits), eps)
    while out is Outcome.UNDECIDED and digits * 2 <= family.digit_cap:
        digits *= 2
        out = is_less(term_distance(family, m, i, digits), eps)
    return out


def bad_indices(family: AlphaFamily, m: int, eps, k: int) -> list[int]:
    """Indices ``i <= k`` for which ``||m alpha_i|| < eps`` is not certified."""
    eps = Fraction(eps)
    return [i for i in range(1, k + 1) if _certified_small(family, m, i, eps) is not Outcome.TRUE]


def theorem1_check(seq: RigiditySequence, eps, k: int, family: AlphaFamily) -> int | None:
    """Smallest ``N0`` such that every term ``m_n`` with ``n > N0`` has at most one
    index ``i <= k`` without a certified ``||m_n alpha_i|| < eps``.

    ``None`` means the last term still has two bad indices (not yet stable).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    last_bad = 0
    for n, t in enumerate(seq.terms, start=1):
        if len(bad_indices(family, t.m, eps, k)) > 1:
            last_bad = n
    if seq.terms and last_bad == len(seq.terms):
        return None
    return last_bad


def analytic_n0(seq: RigiditySequence, eps) -> dict:
    """The proof's candidate ``(max_i N_r(i))^2`` with ``1/(2(r+1)^2) < eps``, both readings.

    ``value`` reads ``N_r(i)`` as the stage-``r`` window start, ``position`` as
    the number of terms before stage ``r``.  Only bases with ``i <= r`` enter.
    """
    eps = Fraction(eps)
    r = 1
    while stage_eps(r) >= eps:
        r += 1
    vals, poss = [], []
    for b in seq.bases:
        if b.excluded <= r and r <= len(b.stages):
            vals.append(b.stages[r - 1].window.lo)
            poss.append(b.stage_start(r))
    if not vals:
        return {"r": r, "value": None, "position": None}
    return {"r": r, "value": max(vals) ** 2, "position": max(poss) ** 2}
