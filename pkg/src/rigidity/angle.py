"""Certified arithmetic on the circle R/Z.

A :class:`PrecReal` is a midpoint-radius ball ``(mantissa +- radius) * 2**scale``
with arbitrary-size integers, so every containment claim is exact integer
arithmetic.  The three circle operations are :func:`frac`, :func:`dist_to_int`
and :func:`cert_less`; the last one never guesses and answers ``UNDECIDED``
when the ball straddles the threshold.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import PrecisionExhausted

Rational = Union[int, Fraction]


@dataclass(frozen=True, slots=True)
class PrecReal:
    """Ball ``[(mantissa - radius) * 2**scale, (mantissa + radius) * 2**scale]``."""

    mantissa: int
    scale: int = 0
    radius: int = 0

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")

    # construction ---------------------------------------------------------

    @classmethod
    def from_fraction(cls, q: Rational, bits: int = 128) -> "PrecReal":
        """Enclose ``q``; exact when ``q`` is dyadic with at most ``bits`` fraction bits."""
        q = Fraction(q)
        num = q.numerator << bits if bits >= 0 else q.numerator
        den = q.denominator if bits >= 0 else q.denominator << -bits
        fl, rem = divmod(num, den)
        if rem == 0:
            return cls(fl, -bits, 0)
        # floor interval [fl, fl + 1] * 2**-bits, stored by its midpoint
        return cls(2 * fl + 1, -bits - 1, 1)

    @classmethod
    def from_float(cls, x: float) -> "PrecReal":
        num, den = float(x).as_integer_ratio()
        return cls(num, -(den.bit_length() - 1), 0)

    @classmethod
    def from_bounds(cls, lo: Rational, hi: Rational, bits: int = 128) -> "PrecReal":
        """Smallest ball at ``2**-(bits+1)`` granularity containing ``[lo, hi]``."""
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            raise ValueError("empty interval")
        s = bits + 1
        a = (lo.numerator << s) // lo.denominator
        b = -((-(hi.numerator << s)) // hi.denominator)
        return cls(a + b, -s - 1, b - a)

    # accessors ------------------------------------------------------------

    @property
    def mid(self) -> Fraction:
        return _scaled(self.mantissa, self.scale)

    @property
    def rad(self) -> Fraction:
        return _scaled(self.radius, self.scale)

    @property
    def lower(self) -> Fraction:
        return _scaled(self.mantissa - self.radius, self.scale)

    @property
    def upper(self) -> Fraction:
        return _scaled(self.mantissa + self.radius, self.scale)

    def __float__(self) -> float:
        return float(self.mid)

    def contains(self, q: Rational) -> bool:
        return self.lower <= Fraction(q) <= self.upper

    def contains_ball(self, other: "PrecReal") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper

    def canonical(self) -> "PrecReal":
        """Same ball with the common trailing zero bits stripped."""
        m, r, s = self.mantissa, self.radius, self.scale
        if m == 0 and r == 0:
            return PrecReal(0, 0, 0)
        tz = min(_tz(m), _tz(r))
        return PrecReal(m >> tz, s + tz, r >> tz)

    def same_ball(self, other: "PrecReal") -> bool:
        return self.canonical() == other.canonical()

    # arithmetic -----------------------------------------------------------

    def _align(self, other: "PrecReal"):
        s = min(self.scale, other.scale)
        d1, d2 = self.scale - s, other.scale - s
        return (self.mantissa << d1, self.radius << d1, other.mantissa << d2, other.radius << d2, s)

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PrecReal.from_fraction(other, max(-self.scale, 0))
        if not isinstance(other, PrecReal):
            return NotImplemented
        m1, r1, m2, r2, s = self._align(other)
        return PrecReal(m1 + m2, s, r1 + r2)

    __radd__ = __add__

    def __neg__(self):
        return PrecReal(-self.mantissa, self.scale, self.radius)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PrecReal.from_fraction(other, max(-self.scale, 0))
        if not isinstance(other, PrecReal):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return PrecReal(self.mantissa * other, self.scale, self.radius * abs(other))
        if isinstance(other, PrecReal):
            m1, m2 = self.mantissa, other.mantissa
            r1, r2 = self.radius, other.radius
            return PrecReal(m1 * m2, self.scale + other.scale, abs(m1) * r2 + abs(m2) * r1 + r1 * r2)
        return NotImplemented

    __rmul__ = __mul__

    def mul_pow2(self, e: int) -> "PrecReal":
        """Exact multiplication by ``2**e``."""
        return PrecReal(self.mantissa, self.scale + e, self.radius)

    def round_bits(self, bits: int) -> "PrecReal":
        """Coarsen to granularity ``2**-bits``, widening the radius to stay sound."""
        d = -bits - self.scale
        if d <= 0:
            return self
        m = self.mantissa >> d
        # floor of mantissa loses < 1 ulp; round the old radius up
        r = ((self.radius + (1 << d) - 1) >> d) + 1
        return PrecReal(m, -bits, r)

    def abs_upper(self) -> Fraction:
        return max(abs(self.lower), abs(self.upper))


def _scaled(v: int, s: int) -> Fraction:
    return Fraction(v << s) if s >= 0 else Fraction(v, 1 << -s)


def _tz(v: int) -> int:
    if v == 0:
        return 1 << 30
    return (v & -v).bit_length() - 1


def _rad_at_least_quarter(x: PrecReal) -> bool:
    e = -x.scale - 2
    return x.radius >= (1 << e) if e >= 0 else x.radius > 0


def _split_integer(x: PrecReal) -> tuple[int, int]:
    """Return ``(floor(mid), fractional mantissa)`` at ``x.scale``."""
    if x.scale >= 0:
        return x.mantissa << x.scale, 0
    fl = x.mantissa >> -x.scale
    return fl, x.mantissa - (fl << -x.scale)


def straddles_integer(x: PrecReal) -> bool:
    """True when the ball contains points with different integer parts."""
    lo, hi = x.lower, x.upper
    return lo.__floor__() != hi.__floor__()


def frac(x: PrecReal) -> PrecReal:
    """Fractional part ``x - floor(x)``, midpoint in ``[0, 1)``, radius preserved.

    When the ball straddles an integer the result is to be read on the circle:
    the true fractional part lies within ``radius`` of the midpoint modulo 1
    (see :func:`straddles_integer`).
    """
    if _rad_at_least_quarter(x):
        raise PrecisionExhausted("radius >= 1/4, fractional part meaningless", operation="angle.frac")
    if x.scale >= 0:
        return PrecReal(0, x.scale, x.radius)
    _, f = _split_integer(x)
    return PrecReal(f, x.scale, x.radius)


def dist_to_int(x: PrecReal) -> PrecReal:
    """Distance to the nearest integer, ``min(frac(x), 1 - frac(x))``.

    The map is 1-Lipschitz, so the input radius carries over unchanged.
    """
    if _rad_at_least_quarter(x):
        raise PrecisionExhausted("radius >= 1/4, distance meaningless", operation="angle.dist_to_int")
    if x.scale >= 0:
        return PrecReal(0, x.scale, x.radius)
    _, f = _split_integer(x)
    one = 1 << -x.scale
    d = f if 2 * f <= one else one - f
    return PrecReal(d, x.scale, x.radius)


class Outcome(enum.Enum):
    TRUE = "TRUE"
    FALSE = "FALSE"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class CertifiedBool:
    outcome: Outcome
    margin: PrecReal | None = None
    witness: object = None
    detail: str = ""

    @property
    def is_true(self) -> bool:
        return self.outcome is Outcome.TRUE

    @property
    def is_false(self) -> bool:
        return self.outcome is Outcome.FALSE

    @property
    def undecided(self) -> bool:
        return self.outcome is Outcome.UNDECIDED


def _cmp(v: int, s: int, t: Fraction) -> int:
    """Sign of ``v * 2**s - t``."""
    if s >= 0:
        lhs, rhs = (v << s) * t.denominator, t.numerator
    else:
        lhs, rhs = v * t.denominator, t.numerator << -s
    return (lhs > rhs) - (lhs < rhs)


def cert_less(x: PrecReal, threshold: Rational) -> CertifiedBool:
    """Decide ``x < threshold`` soundly; margin is ``threshold - x``."""
    t = Fraction(threshold)
    margin = PrecReal.from_fraction(t, max(-x.scale, 0)) - x
    if _cmp(x.mantissa + x.radius, x.scale, t) < 0:
        return CertifiedBool(Outcome.TRUE, margin)
    if _cmp(x.mantissa - x.radius, x.scale, t) >= 0:
        return CertifiedBool(Outcome.FALSE, margin)
    return CertifiedBool(Outcome.UNDECIDED, margin)


def is_less(x: PrecReal, threshold: Rational) -> Outcome:
    """Outcome-only variant of :func:`cert_less` for hot loops."""
    t = Fraction(threshold)
    if _cmp(x.mantissa + x.radius, x.scale, t) < 0:
        return Outcome.TRUE
    if _cmp(x.mantissa - x.radius, x.scale, t) >= 0:
        return Outcome.FALSE
    return Outcome.UNDECIDED


def sum_balls(values) -> PrecReal:
    total = PrecReal(0)
    for v in values:
        total = total + v
    return total


# decimal I/O -------------------------------------------------------------

_DEC_RE = re.compile(
    r"^\s*(?P<mid>[+-]?\d+(?:\.\d*)?(?:e[+-]?\d+)?)"
    r"\(±(?P<rad>\d+(?:\.\d*)?(?:e[+-]?\d+)?)\)\s*$",
    re.IGNORECASE,
)


def _exact_decimal(q: Fraction) -> str:
    """Scientific notation of a dyadic rational, all digits exact."""
    if q == 0:
        return "0e+0"
    sign = "-" if q < 0 else ""
    q = abs(q)
    den = q.denominator
    k = den.bit_length() - 1
    if den != 1 << k:
        raise ValueError("not a dyadic rational")
    digits = str(q.numerator * 5**k)
    exp10 = len(digits) - 1 - k
    body = digits.rstrip("0") or "0"
    mant = body[0] + ("." + body[1:] if len(body) > 1 else "")
    return f"{sign}{mant}e{exp10:+d}"


def _rounded_decimal(q: Fraction, sig: int, up: bool) -> tuple[str, Fraction]:
    """Round ``|q|`` to ``sig`` significant digits, upward if ``up``; returns text and value."""
    if q == 0:
        return "0e+0", Fraction(0)
    sign = -1 if q < 0 else 1
    a = abs(q)
    e = len(str(a.numerator // a.denominator)) - 1 if a >= 1 else -len(str(a.denominator // a.numerator))
    while Fraction(10) ** e > a:
        e -= 1
    while Fraction(10) ** (e + 1) <= a:
        e += 1
    scale = Fraction(10) ** (sig - 1 - e)
    scaled = a * scale
    n = -((-scaled.numerator) // scaled.denominator) if up else round(scaled)
    value = sign * Fraction(n) / scale
    digits = str(n)
    if len(digits) > sig:
        e += 1
        digits = digits[:sig]
    body = digits.rstrip("0") or "0"
    mant = body[0] + ("." + body[1:] if len(body) > 1 else "")
    return f"{'-' if sign < 0 else ''}{mant}e{e:+d}", value


def to_decimal_string(x: PrecReal, digits: int | None = None) -> str:
    """Serialize as ``m.dddde+k(±r)``.

    With ``digits=None`` both midpoint and radius are written exactly and
    :func:`from_decimal_string` restores the identical ball.  With ``digits``
    set the midpoint is rounded and the radius widened to keep enclosure.
    """
    if digits is None:
        return f"{_exact_decimal(x.mid)}(±{_exact_decimal(x.rad)})"
    mid_txt, mid_val = _rounded_decimal(x.mid, digits, up=False)
    rad_txt, _ = _rounded_decimal(x.rad + abs(mid_val - x.mid), 2, up=True)
    return f"{mid_txt}(±{rad_txt})"


def from_decimal_string(text: str, bits: int = 128) -> PrecReal:
    """Parse ``m.dddde+k(±r)``; dyadic values come back bit-exact, others are enclosed."""
    match = _DEC_RE.match(text)
    if match is None:
        raise ValueError(f"malformed ball literal: {text!r}")
    mid = Fraction(match.group("mid"))
    rad = Fraction(match.group("rad"))
    exps = [_dyadic_exponent(mid), _dyadic_exponent(rad)]
    if None not in exps:
        s = max(exps)
        return PrecReal(int(mid * (1 << s)), -s, int(rad * (1 << s))).canonical()
    return PrecReal.from_bounds(mid - rad, mid + rad, bits)


def _dyadic_exponent(q: Fraction) -> int | None:
    den = q.denominator
    k = den.bit_length() - 1
    return k if den == 1 << k else None
