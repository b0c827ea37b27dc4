from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from rigidity.angle import PrecReal
from rigidity.sequence import RigiditySequence
from rigidity.verify import (
    as_fraction,
    coverage,
    divisibility_profile,
    frac_pi,
    obstruction_check,
    remark7_check,
    replay_stages,
)

# regression constant: first index at which frac(m_n pi) has visited all 20 arcs
PI_FULL_AT_20 = 49


def test_frac_pi():
    x = frac_pi(40)
    assert x.contains(Fraction("0.14159265358979323846264338327950288419716939937510")) or x.rad < Fraction(1, 10**40)
    assert abs(float(x.mid) - 0.14159265358979323) < 1e-16


def test_coverage_of_pi(seq64):
    rec = coverage(frac_pi(), seq64.values, 20)
    assert rec.full and rec.first_full == PI_FULL_AT_20 and rec.undecided == 0
    assert sum(rec.counts) == 64


def test_confined_orbit_is_not_yet():
    rec = coverage(PrecReal(0), [3, 5, 8], 2)
    assert rec.mask == [True, False] and rec.first_full is None
    assert rec.as_dict()["first_full"] == "NOT_YET"


def test_empty_prefix(seq64):
    rec = coverage(frac_pi(), seq64.values, 5, N=0)
    assert rec.mask == [False] * 5


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 64), st.integers(0, 64), st.sampled_from([5, 10, 20]))
def test_coverage_masks_grow_with_the_prefix(seq64, a, b, l):
    short, long_ = sorted((a, b))
    m1 = coverage(frac_pi(), seq64.values, l, N=short).mask
    m2 = coverage(frac_pi(), seq64.values, l, N=long_).mask
    assert all(y or not x for x, y in zip(m1, m2))


def test_remark7(family, seq64):
    assert remark7_check(seq64, 1, Fraction(1, 2), family).n0 == 0
    r = remark7_check(seq64, 3, 0.1, family)
    assert r.n0 == 0 and r.max_after < Fraction(3, 5)


def test_remark7_monotone_in_eps(family, seq64):
    prev = None
    for eps in (Fraction(1, 100), Fraction(1, 20), Fraction(1, 10), Fraction(1, 4)):
        n0 = remark7_check(seq64, 4, eps, family).n0
        n0 = len(seq64) if n0 is None else n0
        if prev is not None:
            assert n0 <= prev
        prev = n0


def test_obstruction(family, seq64):
    base1, base2 = seq64.bases[0], seq64.bases[1]
    delta = 2 * base1.stages[-1].eps
    ok = obstruction_check(base1, 2, delta, family)
    assert ok.outcome == "CONFINED" and ok.index <= ok.final_start
    bad = obstruction_check(base2, 2, delta, family)
    assert bad.outcome == "FAIL" and bad.witness is not None
    assert obstruction_check(base1, 2, Fraction(1, 2), family).index == 0


def test_divisibility_profile(seq64):
    prof = divisibility_profile(seq64, 6)
    assert sorted(prof) == [2, 3, 4, 5, 6]
    for k, row in prof.items():
        assert all(seq64.values[n - 1] % k for n in row["indices"])
        for j in seq64.completed_super_stages():
            assert row["per_super_stage"][j] >= 1


def test_divisibility_counts_monotone(seq64):
    short = RigiditySequence(seq64.terms[:20], seq64.bases)
    a, b = divisibility_profile(short, 6), divisibility_profile(seq64, 6)
    for k in a:
        assert len(a[k]["indices"]) <= len(b[k]["indices"])


def test_stage_replay(family, seq64):
    recs = replay_stages(family, seq64, digits=80)
    assert len(recs) == 16 and all(r.outcome == "TRUE" for r in recs)


def test_as_fraction_reads_floats_as_decimals():
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction("3/7") == Fraction(3, 7)
