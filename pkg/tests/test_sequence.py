from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rigidity.errors import InsufficientBaseTerms, WindowBudgetExceeded
from rigidity.search import certify_approximant
from rigidity.sequence import (
    analytic_n0,
    bad_indices,
    build_base_sequence,
    build_sequence,
    default_k_policy,
    diagonal_order,
    interleave,
    reindexed,
    stage_eps,
    theorem1_check,
)

FIRST_TEN = [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1), (1, 4), (2, 3), (3, 2), (4, 1)]


def test_stage_constants():
    assert [stage_eps(j) for j in (1, 2, 3, 4)] == [Fraction(1, 8), Fraction(1, 18), Fraction(1, 32), Fraction(1, 50)]
    assert default_k_policy(1) == 16
    assert reindexed(2, 4) == [1, 3, 4, 5]
    assert reindexed(None, 3) == [1, 2, 3]


def test_provenance_follows_anti_diagonals(seq64):
    assert seq64.provenance()[:10] == FIRST_TEN


def test_head_values(seq64):
    # regression: first terms of the default build
    assert seq64.values[:5] == [4, 7, 17, 123, 9582]


@given(st.integers(1, 6), st.integers(0, 200))
def test_diagonal_order_enumerates_each_base_in_order(B, total):
    order = diagonal_order(B, total)
    assert len(order) == total == len(set(order))
    for i in range(1, B + 1):
        pos = [n for s, n in order if s == i]
        assert pos == list(range(1, len(pos) + 1))


def test_windows_tile_and_stages_certify(family, seq64):
    for base in seq64.bases:
        lo = 1
        for stage in base.stages:
            assert stage.window.lo == lo
            lo = stage.window.hi + 1
            assert stage.terms and all(m in stage.window for m in stage.terms)
            assert base.excluded not in stage.indices and len(stage.indices) == stage.j
            for m in stage.terms:
                assert certify_approximant(family, stage.indices, stage.eps, m)
            for r, w in stage.divisor_witnesses.items():
                assert w % r and w in stage.terms
            assert set(stage.divisor_witnesses) == set(range(2, max(stage.j, 6) + 1))


def test_shift_skips_stages_before_the_excluded_index(seq64):
    for base in seq64.bases:
        skipped = {s for _, s in base.tagged()[: base.shift()]}
        assert skipped == set(range(1, min(base.excluded, 4)))


def test_terms_from_a_base_miss_only_its_excluded_direction(family, seq64):
    eps = Fraction(1, 8)
    bases = {b.excluded: b for b in seq64.bases}
    checked = 0
    for t in seq64.terms:
        covered = set(bases[t.source].stages[t.stage - 1].indices)
        if {1, 2, 3} - {t.source} <= covered:
            assert set(bad_indices(family, t.m, eps, 3)) <= {t.source}
            checked += 1
    assert checked > 50


def test_theorem1_check(family, seq64):
    assert theorem1_check(seq64, Fraction(1, 8), 3, family) == 0
    n0 = theorem1_check(seq64, Fraction(1, 50), 5, family)
    assert n0 is not None
    for t in seq64.terms[n0:]:
        assert len(bad_indices(family, t.m, Fraction(1, 50), 5)) <= 1


def test_analytic_n0(seq64):
    out = analytic_n0(seq64, Fraction(1, 8))
    assert out["r"] == 2
    assert out["value"] == max(b.stages[1].window.lo for b in seq64.bases if b.excluded <= 2) ** 2


def test_super_stages(seq64):
    done = seq64.completed_super_stages()
    assert done == [1, 2, 3]
    stages = seq64.super_stages()
    assert sorted(n for ns in stages.values() for n in ns) == list(range(1, 65))


def test_increasing_view(seq64):
    v = seq64.increasing_view()
    assert v == sorted(set(seq64.values))


def test_empty_builds(family):
    assert len(build_sequence(family, 0, 4, 10)) == 0
    assert len(build_sequence(family, 2, 2, 0)) == 0


def test_interleave_needs_enough_terms(family):
    base = build_base_sequence(family, 1, 2)
    with pytest.raises(InsufficientBaseTerms):
        interleave([base], len(base.shifted()) + 1)


def test_window_budget(family):
    with pytest.raises(WindowBudgetExceeded):
        build_base_sequence(family, 1, 4, window_budget=10_000)


def test_v_constants(seq64):
    base = seq64.bases[0]
    assert base.stages[0].v is not None and base.stages[0].v.lower > 0
    assert base.stages[-1].v_status in ("ok", "box_too_large")
