"""Checks tying built sequences back to the statements they are meant to illustrate.

Density and non-density are tail properties, so everything here is evidence on
a finite prefix: coverage masks, confinement indices, sum bounds and
divisibility counts.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import iv

from .angle import Outcome, PrecReal, dist_to_int, frac, is_less, to_decimal_string
from .family import AlphaFamily, _mpf_fraction, digits_to_bits
from .search import SearchWindow, certify_approximant, simultaneous_hits
from .sequence import BaseSequence, RigiditySequence

_PI_LOCK = threading.Lock()


def frac_pi(digits: int = 60) -> PrecReal:
    """``frac(pi)`` enclosed by interval evaluation."""
    bits = digits_to_bits(digits) + 8
    with _PI_LOCK:
        saved = iv.prec
        iv.prec = bits + 16
        try:
            lo, hi = (_mpf_fraction(r) for r in iv.pi._mpi_)
        finally:
            iv.prec = saved
    return PrecReal.from_bounds(lo - 3, hi - 3, bits)


def as_fraction(x) -> Fraction:
    """Exact rational; floats are read through their shortest decimal form (0.1 -> 1/10)."""
    return Fraction(repr(x)) if isinstance(x, float) else Fraction(x)


@dataclass
class Record:
    """One line of the verification report."""

    check: str
    parameters: dict
    outcome: str
    witness: object = None
    margin: object = None

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "parameters": self.parameters,
            "outcome": self.outcome,
            "witness": self.witness,
            "margin": self.margin,
        }


# coverage -----------------------------------------------------------------


@dataclass
class CoverageRecord:
    theta: str
    l: int
    mask: list[bool]
    first_full: int | None  # None means NOT_YET
    undecided: int = 0
    counts: list[int] = field(default_factory=list)

    @property
    def full(self) -> bool:
        return all(self.mask)

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "l": self.l,
            "mask": "".join("1" if b else "0" for b in self.mask),
            "first_full": self.first_full if self.first_full is not None else "NOT_YET",
            "undecided": self.undecided,
            "counts": list(self.counts),
        }


def bucket(theta: PrecReal, m: int, l: int) -> int | None:
    """``floor(l * frac(m theta))`` when certified, else ``None``."""
    y = frac(theta * m)
    lo, hi = (y.lower * l).__floor__(), (y.upper * l).__floor__()
    if lo != hi or lo < 0 or lo >= l:
        return None
    return lo


def coverage(theta: PrecReal, values, l: int, N: int | None = None, label: str = "") -> CoverageRecord:
    """Which of the ``l`` arcs ``[b/l, (b+1)/l)`` the points ``frac(m_n theta)``, ``n <= N``, visit."""
    if l < 2:
        raise ValueError("l must be >= 2")
    values = list(values)
    if N is None:
        N = len(values)
    mask = [False] * l
    counts = [0] * l
    undecided = 0
    first_full = None
    hit = 0
    for n, m in enumerate(values[:N], start=1):
        b = bucket(theta, m, l)
        if b is None:
            undecided += 1
            continue
        counts[b] += 1
        if not mask[b]:
            mask[b] = True
            hit += 1
            if hit == l:
                first_full = n
    return CoverageRecord(label or to_decimal_string(theta, 12), l, mask, first_full, undecided, counts)


# obstruction --------------------------------------------------------------


@dataclass
class ObstructionResult:
    outcome: str  # CONFINED or FAIL
    index: int  # positions after this one are all confined
    witness: int | None = None  # term at the last offending position
    final_start: int = 0  # shifted positions before the final stage

    def as_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "index": self.index,
            "witness": self.witness,
            "final_start": self.final_start,
        }


def obstruction_check(base: BaseSequence, t: int, delta, family: AlphaFamily, digits: int = 40) -> ObstructionResult:
    """Confinement of ``||s_n alpha_t||`` below ``delta`` along the shifted base sequence.

    ``index`` is the last position where confinement is not certified (0 if
    none).  The outcome is FAIL when that position falls inside the final
    built stage, since then no confinement is witnessed at all.
    """
    delta = as_fraction(delta)
    terms = base.shifted()
    final = len(base.stages)
    final_start = sum(1 for _, s in terms if s < final)
    last = 0
    for pos, (m, _) in enumerate(terms, start=1):
        if _small(family, t, m, delta, digits) is not Outcome.TRUE:
            last = pos
    if last > final_start:
        return ObstructionResult("FAIL", last, witness=terms[last - 1][0], final_start=final_start)
    return ObstructionResult("CONFINED", last, final_start=final_start)


def _small(family, i, m, bound, digits=40) -> Outcome:
    out = is_less(dist_to_int(family.alpha(i, digits) * m), bound)
    while out is Outcome.UNDECIDED and 2 * digits <= family.digit_cap:
        digits *= 2
        out = is_less(dist_to_int(family.alpha(i, digits) * m), bound)
    return out


# tail sum bound -----------------------------------------------------------


@dataclass
class Remark7Result:
    n0: int | None  # None means NOT_YET
    max_after: Fraction | None  # largest certified upper bound on the sum for n > n0

    def as_dict(self) -> dict:
        return {
            "n0": self.n0 if self.n0 is not None else "NOT_YET",
            "max_after": None if self.max_after is None else float(self.max_after),
        }


def remark7_sum(family: AlphaFamily, m: int, i: int, digits: int = 40) -> PrecReal:
    total = PrecReal(0)
    for s in range(1, i + 1):
        total = total + dist_to_int(family.alpha(s, digits) * m)
    return total


def remark7_check(seq: RigiditySequence, i: int, eps, family: AlphaFamily) -> Remark7Result:
    """Smallest ``n0`` such that ``sum_{s<=i} ||m_n alpha_s|| < 1/2 + eps`` is certified for every prefix ``n > n0``."""
    if i < 1:
        raise ValueError("i must be >= 1")
    bound = Fraction(1, 2) + as_fraction(eps)
    uppers = []
    last = 0
    for n, m in enumerate(seq.values, start=1):
        digits = 40
        val = remark7_sum(family, m, i, digits)
        out = is_less(val, bound)
        while out is Outcome.UNDECIDED and 2 * digits <= family.digit_cap:
            digits *= 2
            val = remark7_sum(family, m, i, digits)
            out = is_less(val, bound)
        uppers.append(val.upper)
        if out is not Outcome.TRUE:
            last = n
    if seq.values and last == len(seq.values):
        return Remark7Result(None, None)
    tail = uppers[last:]
    return Remark7Result(last, max(tail) if tail else None)


# divisibility -------------------------------------------------------------


def divisibility_profile(seq: RigiditySequence, k_max: int) -> dict[int, dict]:
    """For ``k = 2 .. k_max``: prefix indices with ``k`` not dividing ``m_n``, and counts per super-stage."""
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    stages = sorted({t.stage for t in seq.terms})
    out = {}
    for k in range(2, k_max + 1):
        idx = [n for n, t in enumerate(seq.terms, start=1) if t.m % k]
        per = {j: 0 for j in stages}
        for n in idx:
            per[seq.terms[n - 1].stage] += 1
        out[k] = {"indices": idx, "per_super_stage": per}
    return out


# stage certificates -------------------------------------------------------


def replay_stage(family: AlphaFamily, base: BaseSequence, j: int, digits: int = 80, rescan: bool = True) -> Record:
    """Re-derive one stage certificate: membership at ``digits``, divisor witnesses, tiling, completeness."""
    st = base.stages[j - 1]
    params = {"excluded": base.excluded, "stage": j, "digits": digits}
    if not st.terms:
        return Record("stage_certificate", params, "FALSE", witness="empty stage")
    expected_lo = 1 if j == 1 else base.stages[j - 2].window.hi + 1
    if st.window.lo != expected_lo:
        return Record("stage_certificate", params, "FALSE", witness=f"window starts at {st.window.lo}")
    if any(b <= a for a, b in zip(st.terms, st.terms[1:])):
        return Record("stage_certificate", params, "FALSE", witness="terms not increasing")
    for m in st.terms:
        if m not in st.window or not certify_approximant(family, st.indices, st.eps, m, digits):
            return Record("stage_certificate", params, "FALSE", witness=m)
    for r, w in st.divisor_witnesses.items():
        if w % r == 0 or w not in st.terms:
            return Record("stage_certificate", params, "FALSE", witness={"divisor": r, "term": w})
    if rescan:
        again = simultaneous_hits(family, st.indices, st.eps, SearchWindow(st.window.lo, st.window.hi)).hits
        if list(again) != list(st.terms):
            return Record("stage_certificate", params, "FALSE", witness="rescan differs")
    return Record("stage_certificate", params, "TRUE", margin=len(st.terms))


def replay_stages(family: AlphaFamily, seq: RigiditySequence, digits: int = 80, rescan: bool = True) -> list[Record]:
    return [replay_stage(family, b, st.j, digits, rescan) for b in seq.bases for st in b.stages]
