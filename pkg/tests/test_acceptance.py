"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from rigidity.angle import PrecReal, dist_to_int
from rigidity.cli import main
from rigidity.errors import RigidityError
from rigidity.fejer import build_witness
from rigidity.measure import MeasureTower, interval_masses, mu
from rigidity.search import SearchWindow, reference_hits, simultaneous_hits
from rigidity.sequence import bad_indices, build_sequence, theorem1_check
from rigidity.verify import (
    coverage,
    divisibility_profile,
    frac_pi,
    obstruction_check,
    remark7_check,
    replay_stages,
)

RESULTS: list[str] = []

FEJER_DEGREES = {2: 6, 3: 8, 4: 10, 5: 13, 6: 15, 7: 18, 8: 22}
PI_FULL_AT_20 = 49
FIRST_TEN = [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1), (1, 4), (2, 3), (3, 2), (4, 1)]


def verdict(number: int, title: str, ok: bool, detail: str, elapsed: float, limit: float | None = None) -> None:
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:.0f}s)" if limit else "")
    if limit is not None and elapsed >= limit:
        ok = False
        detail += "; over time limit"
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail} | {timing}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def seq256(family):
    return build_sequence(family, 4, 4, 256)


def test_criterion_1_norm_algebra():
    t0 = time.perf_counter()
    rng = random.Random(20240601)
    qs = [Fraction(rng.randint(-(10**9), 10**9), rng.randint(1, 10**6)) for _ in range(10_000)]
    bad = 0
    for q in qs:
        d = dist_to_int(PrecReal.from_fraction(q, 96))
        x = PrecReal.from_fraction(q, 96)
        ok = Fraction(0) <= d.mid <= Fraction(1, 2)
        ok &= dist_to_int(-x).same_ball(d)
        ok &= dist_to_int(x + rng.randint(-50, 50)).same_ball(d)
        r = qs[rng.randrange(len(qs))]
        y = PrecReal.from_fraction(r, 96)
        ok &= dist_to_int(x + y).lower <= (d + dist_to_int(y)).upper
        bad += not ok
    verdict(1, "norm algebra on 10^4 rationals", bad == 0, f"{bad} violations", time.perf_counter() - t0, 5)


def test_criterion_2_search_oracle_equivalence(family):
    t0 = time.perf_counter()
    w = SearchWindow(1, 100_000)
    fast = simultaneous_hits(family, [1, 2], Fraction(1, 20), w, threads=4, chunk=1 << 13).hits
    slow = reference_hits(family, [1, 2], Fraction(1, 20), w, digits=80).hits
    small = simultaneous_hits(family, [1, 2], Fraction(1, 10), SearchWindow(1, 100)).hits
    ok = set(fast) == set(slow) and 41 in small
    verdict(
        2,
        "parallel scan equals naive loop at doubled precision",
        ok,
        f"{len(fast)} hits vs {len(slow)} reference; 41 in [1,100] at 1/10: {41 in small}",
        time.perf_counter() - t0,
        60,
    )


def test_criterion_3_fejer_witnesses():
    t0 = time.perf_counter()
    got, margins = {}, {}
    ok = True
    for l in range(2, 9):
        poly, cert = build_witness(l)
        got[l] = poly.degree
        margins[l] = float(cert.margin.lower)
        ok &= cert.is_true and cert.margin.lower > 0
    ok &= got == FEJER_DEGREES
    verdict(
        3,
        "certified trigonometric witnesses for l = 2..8",
        ok,
        f"degrees {got}; min margin {min(margins.values()):.3g}",
        time.perf_counter() - t0,
        120,
    )


def test_criterion_4_sequence_build(family):
    t0 = time.perf_counter()
    seq = build_sequence(family, 4, 4, 64)
    replays = replay_stages(family, seq, digits=80)
    a = all(r.outcome == "TRUE" for r in replays)

    eps = Fraction(1, 8)
    n0 = theorem1_check(seq, eps, 3, family)
    b = n0 is not None
    if b:
        for t in seq.terms[n0:]:
            bad = bad_indices(family, t.m, eps, 3)
            b &= len(bad) <= 1  # at least k-1 good indices

    done = seq.completed_super_stages()
    prof = divisibility_profile(seq, 6)
    c = bool(done) and all(prof[k]["per_super_stage"].get(j, 0) >= 1 for k in range(2, 7) for j in done)
    d = seq.provenance()[:10] == FIRST_TEN
    verdict(
        4,
        "sequence build (4 stages, 4 bases, 64 terms)",
        a and b and c and d,
        f"(a) {len(replays)} stage replays {'TRUE' if a else 'not all TRUE'}; (b) N0={n0}, tail ok: {b}; "
        f"(c) super-stages {done} covered for k=2..6: {c}; (d) provenance: {d}",
        time.perf_counter() - t0,
        600,
    )


def test_criterion_5_remark7(family, seq64):
    t0 = time.perf_counter()
    r = remark7_check(seq64, 3, 0.1, family)
    ok = r.n0 is not None and r.max_after is not None and r.max_after < Fraction(3, 5)
    verdict(
        5,
        "tail sum bound (i = 3, eps = 0.1)",
        ok,
        f"n0={r.n0}; max sum after n0 = {float(r.max_after) if r.max_after is not None else None:.4f}",
        time.perf_counter() - t0,
    )


def test_criterion_6_measure_tower(family, seq256):
    t0 = time.perf_counter()
    tower = MeasureTower(family, seq256)
    stop = None
    try:
        tower.build(5)
    except RigidityError as exc:
        stop = exc
    reached = tower.p
    ok = stop is None and reached == 5
    notes = [f"reached p={reached} of 5 on a {len(seq256)}-term prefix"]
    if stop is not None:
        rec = stop.record()
        notes.append(f"stopped by {rec['error']} in {rec['operation']}: {rec['message']}")
        notes.append(f"details {rec['details']}")

    # replay whatever was built: conditions, masses, perturbation identity, decay
    replay_ok = True
    for p in range(reached + 1):
        for rec in (tower.check_add(p), tower.check_i(p), tower.check_ii(p)):
            replay_ok &= rec.outcome in ("TRUE", "VACUOUS")
        for p0 in range(1, p + 1):
            arcs = interval_masses(mu(tower.ks, p), p0, family)
            replay_ok &= all(mass == Fraction(1, 2**p0) for _, _, mass in arcs)
    for p in range(1, reached):
        for s in range(1, 2**p + 1):
            replay_ok &= all(r.outcome in ("TRUE", "VACUOUS") for r in tower.check_abc(p, s))
            replay_ok &= tower.check_perturbation(p, s).outcome == "TRUE"
    maxima = [tower.block_max(p) for p in range(reached + 1)]
    decay = all(b.upper < a.lower for a, b in zip(maxima, maxima[1:]))
    notes.append(f"replays of built generations {'TRUE' if replay_ok else 'FALSE'}; decay {decay}")

    # the same build with most of the slack spent on partners, for the record
    alt = MeasureTower(family, seq256, slack_fraction=Fraction(15, 16))
    try:
        alt.build(5)
    except RigidityError as exc:
        notes.append(f"slack 15/16 reaches p={alt.p} ({exc.record()['message']})")
    verdict(6, "measure tower up to p = 5", ok and replay_ok and decay, "; ".join(notes), time.perf_counter() - t0, 900)


def test_criterion_7_density_evidence(family, seq256):
    t0 = time.perf_counter()
    cov = coverage(frac_pi(), seq256.values, 20)
    base = seq256.bases[0]
    delta = 2 * base.stages[-1].eps
    obs = obstruction_check(base, 2, delta, family)
    ok = cov.first_full == PI_FULL_AT_20 and obs.outcome == "CONFINED" and obs.index <= obs.final_start
    verdict(
        7,
        "density and confinement evidence",
        ok,
        f"frac(pi) l=20 full at n={cov.first_full} (undecided {cov.undecided}); "
        f"s^(1) alpha_2 below {delta} after position {obs.index} (final stage starts after {obs.final_start})",
        time.perf_counter() - t0,
    )


def test_criterion_8_reproducibility(tmp_path):
    t0 = time.perf_counter()
    codes = [main(["report", "--out", str(tmp_path / name)]) for name in ("one", "two")]

    def tree(root: Path) -> dict:
        return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}

    a, b = tree(tmp_path / "one"), tree(tmp_path / "two")
    ok = a == b and codes[0] == codes[1] and len(a) > 10
    verdict(
        8,
        "byte-identical output trees from two runs",
        ok,
        f"{len(a)} files, identical: {a == b}, exit codes {codes}",
        time.perf_counter() - t0,
    )
