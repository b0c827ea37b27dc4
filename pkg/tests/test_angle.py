from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rigidity.angle import (
    Outcome,
    PrecReal,
    cert_less,
    dist_to_int,
    frac,
    from_decimal_string,
    straddles_integer,
    sum_balls,
    to_decimal_string,
)
from rigidity.errors import PrecisionExhausted

rationals = st.fractions(min_value=-1000, max_value=1000, max_denominator=10**6)
dyadics = st.builds(lambda m, e: PrecReal(m, e, 0), st.integers(-(10**12), 10**12), st.integers(-80, 5))
balls = st.builds(
    lambda m, e, r: PrecReal(m, e, r), st.integers(-(10**12), 10**12), st.integers(-80, -20), st.integers(0, 1000)
)


def exact(q):
    return PrecReal.from_fraction(q, 200)


def norm_ref(q: Fraction) -> Fraction:
    f = q - (q.numerator // q.denominator)
    return min(f, 1 - f)


@given(rationals)
def test_dist_to_int_matches_exact_norm(q):
    d = dist_to_int(exact(q))
    assert d.contains(norm_ref(q))
    assert 0 <= d.lower and d.upper <= Fraction(1, 2) + d.rad * 2


@given(rationals)
def test_symmetry_and_periodicity(q):
    base = dist_to_int(exact(q))
    assert dist_to_int(exact(-q)).same_ball(base)
    for shift in (1, -3, 17):
        assert dist_to_int(exact(q + shift)).same_ball(base)


@given(rationals, rationals)
def test_triangle_inequality_within_radii(a, b):
    lhs = dist_to_int(exact(a + b))
    rhs = dist_to_int(exact(a)) + dist_to_int(exact(b))
    assert lhs.lower <= rhs.upper


@given(balls)
def test_frac_encloses_the_true_fractional_part(x):
    if x.rad >= Fraction(1, 4):
        return
    f = frac(x)
    mid = x.mid - (x.mid.numerator // x.mid.denominator)
    assert f.contains(mid) or f.contains(mid + 1) or f.contains(mid - 1)
    assert f.rad == x.rad


def test_wide_ball_is_rejected():
    with pytest.raises(PrecisionExhausted):
        dist_to_int(PrecReal(0, 0, 1))


@given(balls, balls)
def test_arithmetic_encloses_midpoints(x, y):
    assert (x + y).contains(x.mid + y.mid)
    assert (x - y).contains(x.mid - y.mid)
    assert (x * y).contains(x.mid * y.mid)


@given(dyadics)
def test_decimal_round_trip_is_bit_exact(x):
    back = from_decimal_string(to_decimal_string(x))
    assert back.mid == x.mid and back.rad == x.rad


@given(balls, st.integers(3, 30))
def test_rounded_decimal_encloses(x, digits):
    y = from_decimal_string(to_decimal_string(x, digits))
    assert y.lower <= x.lower and x.upper <= y.upper


@settings(max_examples=200)
@given(balls, rationals)
def test_cert_less_is_sound(x, t):
    out = cert_less(x, t).outcome
    if out is Outcome.TRUE:
        assert x.upper < t
    elif out is Outcome.FALSE:
        assert x.lower >= t
    else:
        assert x.lower < t <= x.upper


def test_cert_less_undecided_on_straddle():
    x = PrecReal.from_bounds(Fraction(1, 3), Fraction(1, 2), 60)
    assert cert_less(x, Fraction(2, 5)).undecided
    assert cert_less(x, Fraction(3, 5)).is_true
    assert cert_less(x, Fraction(1, 4)).is_false


def test_straddles_integer():
    assert straddles_integer(PrecReal.from_bounds(Fraction(-1, 8), Fraction(1, 8)))
    assert not straddles_integer(PrecReal.from_bounds(Fraction(1, 8), Fraction(3, 8)))


def test_sum_balls_adds_radii():
    s = sum_balls([PrecReal(1, -2, 1), PrecReal(1, -2, 1)])
    assert s.mid == Fraction(1, 2) and s.rad == Fraction(1, 2)


def test_known_norms():
    assert dist_to_int(exact(Fraction(7, 10))).contains(Fraction(3, 10))
    assert dist_to_int(exact(Fraction(1, 2))).contains(Fraction(1, 2))
    assert dist_to_int(exact(3)).contains(0)
