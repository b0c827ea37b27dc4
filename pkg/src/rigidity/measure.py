"""Inductive tower of atomic measures mu_p = 2^-p sum_{i<=2^p} delta_{k_i alpha_i}.

Going from ``mu_p`` to ``mu_{p+1}`` adds the atoms ``2^p + 1 .. 2^{p+1}`` one at
a time.  Each new atom sits within ``target_delta`` of its partner
``k_s alpha_s``; the intermediate measures are

    nu_{p,s} = mu_p + 2^-(p+1) sum_{i<=s} (delta_{k_{2^p+i} alpha_{2^p+i}} - delta_{k_i alpha_i}).

Every inequality is decided with ball arithmetic on the built prefix of the
rigidity sequence.  Statements quantified over all ``n >= N`` are only ever
established on ``N <= n <= len(prefix)`` and are labelled PREFIX-CERTIFIED.

Thresholds (``N_p``, ``N_{p,s}``) are first-index scans with a safety factor
of 2: a threshold ``t`` is accepted only if ``2 t <= len(prefix)``, so at least
half of the prefix witnesses the tail condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .angle import Outcome, PrecReal, dist_to_int, frac, is_less
from .errors import (
    ConditionViolated,
    Degenerate,
    PrecisionExhausted,
    PrefixTooShort,
    ScanBudgetExceeded,
    SlackExhausted,
)
from .family import AlphaFamily
from .sequence import RigiditySequence

DIGITS = 60
DEFAULT_SCAN_BUDGET = 1 << 32
SAFETY = 2


@dataclass(frozen=True)
class Atom:
    i: int  # family index, also the atom's label
    k: int
    weight: Fraction


@dataclass(frozen=True)
class AtomicMeasure:
    """Weighted Dirac atoms at ``k_i alpha_i``; ``p`` is the generation."""

    p: int
    atoms: tuple[Atom, ...]
    label: str = "mu"

    def __post_init__(self):
        if sum(a.weight for a in self.atoms) != 1:
            raise ValueError("weights must sum to 1")

    @property
    def ks(self) -> list[int]:
        return [a.k for a in self.atoms]


def mu(ks: list[int], p: int) -> AtomicMeasure:
    w = Fraction(1, 2**p)
    return AtomicMeasure(p, tuple(Atom(i, ks[i - 1], w) for i in range(1, 2**p + 1)), f"mu_{p}")


def nu(ks: list[int], p: int, s: int) -> AtomicMeasure:
    """``nu_{p,s}``; needs ``k_1 .. k_{2^p + s}``."""
    half, full = Fraction(1, 2 ** (p + 1)), Fraction(1, 2**p)
    atoms = [Atom(i, ks[i - 1], half if i <= s else full) for i in range(1, 2**p + 1)]
    atoms += [Atom(2**p + i, ks[2**p + i - 1], half) for i in range(1, s + 1)]
    return AtomicMeasure(p, tuple(atoms), f"nu_{p},{s}")


def _pow2_exponent(w: Fraction) -> int:
    e = w.denominator.bit_length() - 1
    if w.numerator != 1 or w.denominator != 1 << e:
        raise ValueError("weights must be powers of two")
    return e


class Evaluator:
    """Cached certified ``||m_n k alpha_i||`` for one family and sequence prefix."""

    def __init__(self, family: AlphaFamily, seq: RigiditySequence, digits: int = DIGITS):
        self.family = family
        self.seq = seq
        self.values = seq.values
        self.digits = digits
        self._cache: dict[tuple[int, int, int], PrecReal] = {}

    def __len__(self):
        return len(self.values)

    def position(self, i: int, k: int) -> PrecReal:
        return frac(self.family.alpha(i, self.digits) * k)

    def dist(self, i: int, k: int, n: int) -> PrecReal:
        key = (i, k, n)
        hit = self._cache.get(key)
        if hit is None:
            hit = dist_to_int(self.family.alpha(i, self.digits) * (self.values[n - 1] * k))
            self._cache[key] = hit
        return hit

    def mu_eval(self, measure: AtomicMeasure, n: int) -> PrecReal:
        total = PrecReal(0)
        for a in measure.atoms:
            total = total + self.dist(a.i, a.k, n).mul_pow2(-_pow2_exponent(a.weight))
        return total


def mu_eval(measure: AtomicMeasure, n: int, seq: RigiditySequence, family: AlphaFamily) -> PrecReal:
    """``int ||m_n theta|| d measure(theta)``, certified."""
    if not 1 <= n <= len(seq):
        raise ValueError(f"n={n} outside the built prefix")
    return Evaluator(family, seq).mu_eval(measure, n)


def circle_gap(x: PrecReal, y: PrecReal) -> PrecReal:
    """``||x - y||`` for two circle positions."""
    return dist_to_int(x - y)


def _ball_min(balls) -> PrecReal:
    balls = list(balls)
    return PrecReal.from_bounds(min(b.lower for b in balls), min(b.upper for b in balls), 160)


def eta(measure: AtomicMeasure, p0: int, family: AlphaFamily, digits: int = DIGITS) -> PrecReal:
    """A quarter of the minimum pairwise circle distance among the first ``2^p0`` atoms."""
    count = 2**p0
    if p0 < 1 or len(measure.atoms) < count:
        raise Degenerate(f"eta needs at least two atoms (p0={p0})", operation="measure.eta")
    pos = [frac(family.alpha(a.i, digits) * a.k) for a in measure.atoms[:count]]
    gaps = [circle_gap(pos[a], pos[b]) for a in range(count) for b in range(a + 1, count)]
    return _ball_min(gaps).mul_pow2(-2)


def choose_partner(
    family: AlphaFamily,
    new_index: int,
    target: PrecReal,
    delta,
    *,
    scan_budget: int = DEFAULT_SCAN_BUDGET,
    chunk: int = 1 << 20,
) -> int:
    """Smallest ``k >= 1`` with certified ``||k alpha_new - target|| < delta``.

    Ascending vectorised scan in the same wrapping fixed-point representation
    as the window searches, with ball-arithmetic confirmation.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    A, R = family.fixed64(new_index)
    T = (target.mid * (1 << 64)).__floor__()
    RT = (target.rad * (1 << 64)).__ceil__() + 1
    T %= 1 << 64
    E = -((-(delta.numerator << 64)) // delta.denominator) if delta < Fraction(1, 2) else 1 << 63
    lo = 1
    zero = np.uint64(0)
    while lo <= scan_budget:
        hi = min(scan_budget, lo + chunk - 1)
        k = np.arange(lo, hi + 1, dtype=np.uint64)
        x = k * np.uint64(A) - np.uint64(T)
        d = np.minimum(x, zero - x)
        err = np.uint64(hi * R + RT)
        maybe = np.flatnonzero(d < np.uint64(E) + err)
        for pos in maybe.tolist():
            kk = lo + pos
            if _certify_partner(family, new_index, target, delta, kk):
                return kk
        lo = hi + 1
    raise ScanBudgetExceeded(
        f"no partner multiplier below {scan_budget} for alpha_{new_index}", operation="measure.choose_partner"
    )


def _certify_partner(family, new_index, target, delta, k, digits=DIGITS) -> bool:
    while digits <= family.digit_cap:
        out = is_less(circle_gap(family.alpha(new_index, digits) * k, target), delta)
        if out is not Outcome.UNDECIDED:
            return out is Outcome.TRUE
        if target.rad > 0 and digits > DIGITS:
            # the target's own radius is the bottleneck
            return False
        digits *= 2
    raise PrecisionExhausted("partner certificate undecided", operation="measure.choose_partner")


@dataclass
class ConditionRecord:
    name: str
    generation: int
    step: int | None
    outcome: str  # TRUE / FALSE / UNDECIDED / VACUOUS
    checked: int  # number of (n, atom) instances checked
    margin: float | None  # smallest certified slack (lower end)
    witness: int | None = None
    scope: str = "PREFIX-CERTIFIED"

    def as_dict(self) -> dict:
        return {
            "check": self.name,
            "generation": self.generation,
            "step": self.step,
            "outcome": self.outcome,
            "checked": self.checked,
            "margin": self.margin,
            "witness": self.witness,
            "scope": self.scope,
        }


@dataclass
class MeasureSchedule:
    N: list[int] = field(default_factory=lambda: [0])
    inner: dict[tuple[int, int], int] = field(default_factory=dict)
    records: list[ConditionRecord] = field(default_factory=list)
    targets: dict[tuple[int, int], Fraction] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "N": list(self.N),
            "inner_N": {f"{p},{s}": v for (p, s), v in sorted(self.inner.items())},
            "target_delta": {f"{p},{s}": str(v) for (p, s), v in sorted(self.targets.items())},
        }


def _check_bound(ev: Evaluator, measure, ns, bound: Fraction, name, p, s=None) -> ConditionRecord:
    """Certify ``measure^n < bound`` for all ``n`` in ``ns``."""
    ns = list(ns)
    if not ns:
        return ConditionRecord(name, p, s, "VACUOUS", 0, None)
    worst = None
    for n in ns:
        val = ev.mu_eval(measure, n)
        out = is_less(val, bound)
        slack = float(bound - val.upper)
        if worst is None or slack < worst:
            worst = slack
        if out is not Outcome.TRUE:
            return ConditionRecord(name, p, s, out.value, len(ns), slack, witness=n)
    return ConditionRecord(name, p, s, "TRUE", len(ns), worst)


def add_bound(p: int) -> Fraction:
    return Fraction(1, 2 ** (p + 1)) + Fraction(1, 2 ** (p + 3))


def _first_tail_index(ev: Evaluator, measure, bound: Fraction, after: int) -> int | None:
    """Smallest ``t > after`` with ``measure^n < bound`` certified for all ``t <= n <= len``."""
    n = len(ev)
    t = n + 1
    while t - 1 > after and is_less(ev.mu_eval(measure, t - 1), bound) is Outcome.TRUE:
        t -= 1
    if t > n:
        return None
    return max(t, after + 1)


def _accept_threshold(t: int | None, length: int, what: str) -> int:
    if t is None:
        raise PrefixTooShort(
            f"{what}: condition fails at the last prefix term",
            operation="measure.extend",
            needed_length=SAFETY * (length + 1),
        )
    if SAFETY * t > length:
        raise PrefixTooShort(
            f"{what}: threshold {t} leaves less than half the prefix as evidence",
            operation="measure.extend",
            needed_length=SAFETY * t,
        )
    return t


class MeasureTower:
    """State of the inductive construction: multipliers ``k_i`` and the schedule."""

    def __init__(
        self,
        family: AlphaFamily,
        seq: RigiditySequence,
        *,
        scan_budget: int = DEFAULT_SCAN_BUDGET,
        slack_fraction=Fraction(1, 2),
    ):
        slack_fraction = Fraction(slack_fraction)
        if not 0 < slack_fraction < 1:
            raise ValueError("slack_fraction must lie strictly between 0 and 1")
        self.slack_fraction = slack_fraction
        self.family = family
        self.seq = seq
        self.ev = Evaluator(family, seq)
        self.ks: list[int] = [1]
        self.schedule = MeasureSchedule()
        self.p = 0
        self.scan_budget = scan_budget

    def measure(self, p: int | None = None) -> AtomicMeasure:
        return mu(self.ks, self.p if p is None else p)

    def _record(self, rec: ConditionRecord) -> ConditionRecord:
        self.schedule.records.append(rec)
        return rec

    # conditions ---------------------------------------------------------

    def check_i(self, p: int) -> ConditionRecord:
        """``mu_p^n < 2^-(j-1)`` for ``n in [N_j, N_{j+1}]``, ``1 <= j <= p-1``."""
        m = mu(self.ks, p)
        L = len(self.ev)
        worst = None
        checked = 0
        for j in range(1, p):
            lo, hi = self.schedule.N[j], min(self.schedule.N[j + 1], L)
            rec = _check_bound(self.ev, m, range(max(lo, 1), hi + 1), Fraction(1, 2 ** (j - 1)), "i", p)
            checked += rec.checked
            if rec.outcome not in ("TRUE", "VACUOUS"):
                return rec
            if rec.margin is not None and (worst is None or rec.margin < worst):
                worst = rec.margin
        return ConditionRecord("i", p, None, "TRUE" if checked else "VACUOUS", checked, worst)

    def check_add(self, p: int) -> ConditionRecord:
        lo = max(self.schedule.N[p], 1)
        return _check_bound(self.ev, mu(self.ks, p), range(lo, len(self.ev) + 1), add_bound(p), "add", p)

    def check_ii(self, p: int) -> ConditionRecord:
        """``||k_{l 2^p0 + r} alpha - k_r alpha_r|| < eta_p0`` for all ``1 <= p0 <= p``."""
        m = mu(self.ks, p)
        pos = [self.ev.position(a.i, a.k) for a in m.atoms]
        checked, worst = 0, None
        for p0 in range(1, p + 1):
            e = eta(m, p0, self.family)
            for idx in range(2**p0 + 1, 2**p + 1):
                r = (idx - 1) % 2**p0 + 1
                gap = circle_gap(pos[idx - 1], pos[r - 1])
                checked += 1
                slack = float(e.lower - gap.upper)
                if not gap.upper < e.lower:
                    return ConditionRecord("ii", p, None, "FALSE", checked, slack, witness=idx)
                worst = slack if worst is None else min(worst, slack)
        return ConditionRecord("ii", p, None, "TRUE" if checked else "VACUOUS", checked, worst)

    def check_abc(self, p: int, s: int) -> list[ConditionRecord]:
        n_measure = nu(self.ks, p, s)
        L = len(self.ev)
        out = []
        worst, checked, failed = None, 0, None
        for j in range(1, p):
            lo, hi = self.schedule.N[j], min(self.schedule.N[j + 1], L)
            rec = _check_bound(self.ev, n_measure, range(max(lo, 1), hi + 1), Fraction(1, 2 ** (j - 1)), "A", p, s)
            checked += rec.checked
            if rec.outcome not in ("TRUE", "VACUOUS"):
                failed = rec
                break
            if rec.margin is not None:
                worst = rec.margin if worst is None else min(worst, rec.margin)
        out.append(failed or ConditionRecord("A", p, s, "TRUE" if checked else "VACUOUS", checked, worst))
        lo = max(self.schedule.N[p], 1)
        out.append(_check_bound(self.ev, n_measure, range(lo, L + 1), Fraction(1, 2 ** (p - 1)), "B", p, s))
        lo = self.schedule.inner[(p, s)]
        out.append(_check_bound(self.ev, n_measure, range(lo, L + 1), Fraction(1, 2**p), "C", p, s))
        return out

    def check_perturbation(self, p: int, s: int) -> ConditionRecord:
        """``nu_{p,s}^n - nu_{p,s-1}^n = 2^-(p+1)(||m_n k_new alpha_new|| - ||m_n k_s alpha_s||)``."""
        before = nu(self.ks, p, s - 1) if s > 1 else mu(self.ks, p)
        after = nu(self.ks, p, s)
        new = 2**p + s
        worst = None
        for n in range(1, len(self.ev) + 1):
            lhs = self.ev.mu_eval(after, n) - self.ev.mu_eval(before, n)
            rhs = (self.ev.dist(new, self.ks[new - 1], n) - self.ev.dist(s, self.ks[s - 1], n)).mul_pow2(-(p + 1))
            gap = abs(lhs.mid - rhs.mid) - (lhs.rad + rhs.rad)
            if gap > 0:
                return ConditionRecord("perturbation", p, s, "FALSE", n, float(-gap), witness=n)
            worst = float(-gap) if worst is None else min(worst, float(-gap))
        return ConditionRecord("perturbation", p, s, "TRUE", len(self.ev), worst)

    # construction -------------------------------------------------------

    def _partner_delta(self, p: int, s: int, before: AtomicMeasure) -> Fraction:
        """A fixed fraction (default half) of the smallest slack among the active inequalities,
        converted to a circle distance."""
        prev = self.schedule.N[p] if s == 1 else self.schedule.inner[(p, s - 1)]
        prev = min(prev, len(self.ev))
        candidates: list[Fraction] = []
        for n in range(1, prev + 1):
            bounds = [Fraction(1, 2 ** (j - 1)) for j in range(1, p) if self.schedule.N[j] <= n <= self.schedule.N[j + 1]]
            if n >= self.schedule.N[p]:
                bounds.append(Fraction(1, 2 ** (p - 1)))
            if not bounds:
                continue
            val = self.ev.mu_eval(before, n)
            slack = min(bounds) - val.upper
            if slack <= 0:
                raise SlackExhausted(
                    f"no slack left at n={n} before step ({p},{s})", operation="measure.extend", n=n
                )
            # |nu_s^n - nu_{s-1}^n| <= 2^-(p+1) * m_n * ||new - partner||
            candidates.append(slack * 2 ** (p + 1) / self.ev.values[n - 1])
        m = mu(self.ks, p)
        pos = [self.ev.position(a.i, a.k) for a in m.atoms]
        for p0 in range(1, p + 1):
            r = (s - 1) % 2**p0 + 1
            e = eta(m, p0, self.family)
            used = circle_gap(pos[s - 1], pos[r - 1]).upper if r != s else Fraction(0)
            candidates.append(e.lower - used)
        if not candidates:
            return Fraction(1, 4)
        target = min(candidates) * self.slack_fraction
        if target <= 0:
            raise SlackExhausted(f"separation slack exhausted at step ({p},{s})", operation="measure.extend")
        # round down to a short dyadic
        bits = max(8, -((target.numerator.bit_length() - target.denominator.bit_length())) + 12)
        return Fraction((target.numerator << bits) // target.denominator, 1 << bits)

    def _require(self, rec: ConditionRecord) -> ConditionRecord:
        self._record(rec)
        if rec.outcome not in ("TRUE", "VACUOUS"):
            raise ConditionViolated(
                f"condition {rec.name} failed at generation {rec.generation} step {rec.step} (n={rec.witness})",
                operation="measure.extend",
                check=rec.name,
                witness=rec.witness,
            )
        return rec

    def extend(self) -> AtomicMeasure:
        """Build ``mu_{p+1}`` from ``mu_p`` and extend the schedule."""
        p = self.p
        if p == 0:
            # k_2 = 1 and N_1 = 1 are fixed outright
            self.ks.append(1)
            self.schedule.N.append(1)
            self.p = 1
            self._require(self.check_add(1))
            self._require(self.check_i(1))
            self._require(self.check_ii(1))
            return self.measure()

        L = len(self.ev)
        for s in range(1, 2**p + 1):
            before = nu(self.ks, p, s - 1) if s > 1 else mu(self.ks, p)
            delta = self._partner_delta(p, s, before)
            self.schedule.targets[(p, s)] = delta
            partner = self.ev.position(s, self.ks[s - 1])
            k_new = choose_partner(self.family, 2**p + s, partner, delta, scan_budget=self.scan_budget)
            self.ks.append(k_new)
            after = nu(self.ks, p, s)
            prev = self.schedule.N[p] if s == 1 else self.schedule.inner[(p, s - 1)]
            t = _first_tail_index(self.ev, after, Fraction(1, 2**p), prev)
            try:
                self.schedule.inner[(p, s)] = _accept_threshold(t, L, f"C at ({p},{s})")
            except PrefixTooShort:
                self._record(self._failed_c(p, s, after, prev))
                raise
            for rec in self.check_abc(p, s):
                self._require(rec)
            self._require(self.check_perturbation(p, s))

        new_p = p + 1
        t = _first_tail_index(self.ev, mu(self.ks, new_p), add_bound(new_p), self.schedule.inner[(p, 2**p)])
        try:
            self.schedule.N.append(_accept_threshold(t, L, f"(add) at p={new_p}"))
        except PrefixTooShort:
            self._record(self._failed_add(new_p, t))
            raise
        self.p = new_p
        self._require(self.check_add(new_p))
        self._require(self.check_i(new_p))
        self._require(self.check_ii(new_p))
        return self.measure()

    def _failed_c(self, p, s, after, prev) -> ConditionRecord:
        last = None
        for n in range(len(self.ev), prev, -1):
            if is_less(self.ev.mu_eval(after, n), Fraction(1, 2**p)) is not Outcome.TRUE:
                last = n
                break
        return ConditionRecord("C", p, s, "FALSE", len(self.ev) - prev, None, witness=last)

    def _failed_add(self, p, t) -> ConditionRecord:
        m = mu(self.ks, p)
        last = None
        for n in range(len(self.ev), 0, -1):
            if is_less(self.ev.mu_eval(m, n), add_bound(p)) is not Outcome.TRUE:
                last = n
                break
        return ConditionRecord("add", p, None, "FALSE", len(self.ev), None, witness=last)

    def build(self, p_max: int) -> list[AtomicMeasure]:
        """``mu_0 .. mu_{p_max}``; stops with the raised error if a step cannot be certified."""
        self._record(self.check_add(0))
        while self.p < p_max:
            self.extend()
        return [mu(self.ks, p) for p in range(self.p + 1)]

    # analysis -----------------------------------------------------------

    def block_max(self, p: int) -> PrecReal:
        """Largest ``mu_p^n`` over the last certified block ``N_p <= n <= len``."""
        m = mu(self.ks, p)
        lo = max(self.schedule.N[p], 1)
        vals = [self.ev.mu_eval(m, n) for n in range(lo, len(self.ev) + 1)]
        return PrecReal.from_bounds(max(v.lower for v in vals), max(v.upper for v in vals), 160)


def interval_masses(measure: AtomicMeasure, p0: int, family: AlphaFamily, digits: int = DIGITS):
    """Disjoint arcs ``I_r = [c_r - eta, c_r + eta]`` and their masses under ``measure``.

    Raises :class:`ConditionViolated` when two arcs may overlap, an atom falls
    in no arc, or some arc's mass differs from ``2^-p0``.
    """
    count = 2**p0
    e = eta(measure, p0, family, digits)
    pos = [frac(family.alpha(a.i, digits) * a.k) for a in measure.atoms]
    centers = pos[:count]
    for a in range(count):
        for b in range(a + 1, count):
            # centres at least 4 eta apart, arcs have radius eta
            if not circle_gap(centers[a], centers[b]).lower > 2 * e.upper:
                raise ConditionViolated(f"arcs {a + 1} and {b + 1} may overlap", operation="measure.interval_masses")
    masses = [Fraction(0)] * count
    for idx, atom in enumerate(measure.atoms):
        homes = [r for r in range(count) if circle_gap(pos[idx], centers[r]).upper < e.lower]
        if len(homes) != 1:
            raise ConditionViolated(
                f"atom {atom.i} lies in {len(homes)} arcs", operation="measure.interval_masses", atom=atom.i
            )
        masses[homes[0]] += atom.weight
    target = Fraction(1, count)
    for r, mass in enumerate(masses):
        if mass != target:
            raise ConditionViolated(
                f"arc {r + 1} carries mass {mass}, expected {target}", operation="measure.interval_masses"
            )
    return [(centers[r], e, masses[r]) for r in range(count)]


def measure_document(tower: MeasureTower, p: int, digits: int = 30) -> dict:
    """JSON form of ``mu_p`` with the part of the schedule it depends on."""
    from .angle import to_decimal_string

    m = mu(tower.ks, p)
    return {
        "p": p,
        "atoms": [
            {
                "i": a.i,
                "k": a.k,
                "position": to_decimal_string(tower.ev.position(a.i, a.k), digits),
                "weight": f"1/2^{p}",
            }
            for a in m.atoms
        ],
        "schedule": {
            "N": tower.schedule.N[: p + 1],
            "inner_N": {f"{q},{s}": v for (q, s), v in sorted(tower.schedule.inner.items()) if q < p},
        },
    }


def restore_tower(family: AlphaFamily, seq: RigiditySequence, doc: dict) -> MeasureTower:
    """Rebuild a tower from a measure document (the highest generation carries everything)."""
    tower = MeasureTower(family, seq)
    p = int(doc["p"])
    ks = [int(a["k"]) for a in doc["atoms"]]
    if len(ks) != 2**p:
        raise ValueError("atom count does not match generation")
    tower.ks = ks
    tower.p = p
    tower.schedule.N = [int(x) for x in doc["schedule"]["N"]]
    tower.schedule.inner = {
        tuple(int(t) for t in key.split(",")): int(v) for key, v in doc["schedule"]["inner_N"].items()
    }
    return tower
