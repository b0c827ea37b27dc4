"""Rationally independent families {alpha_i} on the circle, refinable on demand.

Two generators are built in:

* ``sqrt_squarefree``: ``alpha_i = frac(sqrt(d_i))`` with ``d_i`` the i-th
  squarefree integer >= 2.  Square roots of distinct squarefree integers are
  linearly independent over Q together with 1, so every finite subfamily is
  rationally independent.  This is a classical fact; it is not re-verified.
* ``log_prime``: ``alpha_i = frac(ln p_i)``.  Independence of the logarithms of
  distinct primes over Q follows from unique factorisation (and transcendence
  of ln p handles the constant), again documented rather than checked.

Every value is stored as the floor interval ``[a, a + 1] * 2**-bits`` so that
refinement is nested by construction.
"""

from __future__ import annotations

import enum
import math
import threading
from fractions import Fraction
from math import isqrt

from mpmath import iv, libmp

from .angle import PrecReal
from .errors import ConfigError, DigitCapExceeded, UnsupportedIndex

LOG2_10 = math.log2(10)
_IV_LOCK = threading.Lock()


class FamilyKind(str, enum.Enum):
    SQRT_SQUAREFREE = "sqrt_squarefree"
    LOG_PRIME = "log_prime"


def _is_squarefree(n: int) -> bool:
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 1
    return True


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    p = 2
    while p * p <= n:
        if n % p == 0:
            return False
        p += 1
    return True


def digits_to_bits(digits: int) -> int:
    # radius 2**-(bits+1) <= 10**-digits
    return max(1, math.ceil(digits * LOG2_10))


def _floor_sqrt_frac(d: int, bits: int) -> int:
    """floor(frac(sqrt(d)) * 2**bits)."""
    return isqrt(d << (2 * bits)) - (isqrt(d) << bits)


def _mpf_fraction(raw) -> Fraction:
    man, exp = libmp.to_man_exp(raw)
    return Fraction(int(man) << exp) if exp >= 0 else Fraction(int(man), 1 << -exp)


def _floor_log_frac(p: int, bits: int) -> int:
    """floor(frac(ln p) * 2**bits), certified by interval evaluation."""
    whole = math.floor(math.log(p))
    work = bits + 32
    while True:
        with _IV_LOCK:
            saved = iv.prec
            iv.prec = work
            try:
                enc = iv.log(iv.mpf(p))
            finally:
                iv.prec = saved
        lo, hi = (_mpf_fraction(r) for r in enc._mpi_)
        a = ((lo - whole) * (1 << bits)).__floor__()
        b = ((hi - whole) * (1 << bits)).__floor__()
        if a == b and 0 <= a < (1 << bits):
            return a
        work *= 2


class AlphaFamily:
    """Countable family ``alpha_1, alpha_2, ...`` with a per-index precision cache.

    Readers always see a complete cache entry: refinement builds the new ball
    first and swaps it in under a lock, and a finer entry is never replaced by
    a coarser one.
    """

    def __init__(self, kind: FamilyKind | str = FamilyKind.SQRT_SQUAREFREE, digit_cap: int = 4000):
        self.kind = FamilyKind(kind)
        self.digit_cap = digit_cap
        self._generators: list[int] = []
        self._cache: dict[int, tuple[int, PrecReal]] = {}
        self._fixed: dict[int, tuple[int, int]] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"AlphaFamily({self.kind.value!r})"

    def spec(self) -> dict:
        return {"kind": self.kind.value}

    @classmethod
    def from_spec(cls, spec: dict, digit_cap: int = 4000) -> "AlphaFamily":
        try:
            return cls(FamilyKind(spec["kind"]), digit_cap=digit_cap)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad family specification {spec!r}", operation="family.from_spec") from exc

    def generator(self, i: int) -> int:
        """The integer behind ``alpha_i`` (``d_i`` or ``p_i``)."""
        if i < 1:
            raise UnsupportedIndex(f"family index must be >= 1, got {i}", operation="family.alpha")
        test = _is_squarefree if self.kind is FamilyKind.SQRT_SQUAREFREE else _is_prime
        with self._lock:
            n = self._generators[-1] + 1 if self._generators else 2
            while len(self._generators) < i:
                if test(n):
                    self._generators.append(n)
                n += 1
            return self._generators[i - 1]

    def label(self, i: int) -> str:
        g = self.generator(i)
        return f"frac(sqrt({g}))" if self.kind is FamilyKind.SQRT_SQUAREFREE else f"frac(ln {g})"

    def alpha(self, i: int, digits: int) -> PrecReal:
        """``alpha_i`` with radius <= 10**-digits (cached, monotonically refined)."""
        if digits > self.digit_cap:
            raise DigitCapExceeded(
                f"requested {digits} digits, cap is {self.digit_cap}", operation="family.alpha", index=i
            )
        cached = self._cache.get(i)
        if cached is not None and cached[0] >= digits:
            return cached[1]
        g = self.generator(i)
        bits = digits_to_bits(digits)
        if self.kind is FamilyKind.SQRT_SQUAREFREE:
            a = _floor_sqrt_frac(g, bits)
        else:
            a = _floor_log_frac(g, bits)
        value = PrecReal(2 * a + 1, -bits - 1, 1)
        with self._lock:
            cached = self._cache.get(i)
            if cached is None or cached[0] < digits:
                self._cache[i] = (digits, value)
            return self._cache[i][1]

    def cached_digits(self, i: int) -> int:
        cached = self._cache.get(i)
        return cached[0] if cached else 0

    def digits_for(self, m_max: int, slack: Fraction) -> int:
        """Smallest digit count with ``m_max * 10**-digits < slack``."""
        slack = Fraction(slack)
        if slack <= 0 or m_max < 1:
            raise ValueError("need m_max >= 1 and slack > 0")
        d = 1
        while Fraction(m_max, 10**d) >= slack:
            d += 1
        return d

    def refine_for(self, indices, m_max: int, slack) -> None:
        """Refine so that ``m * radius(alpha_i) < slack`` for all ``m <= m_max``."""
        digits = self.digits_for(m_max, Fraction(slack))
        for i in indices:
            self.alpha(i, max(digits, self.cached_digits(i)))

    def fixed64(self, i: int) -> tuple[int, int]:
        """``(A, R)``: ``|alpha_i - A / 2**64| <= R / 2**64`` with ``0 <= A < 2**64``."""
        hit = self._fixed.get(i)
        if hit is not None:
            return hit
        x = self.alpha(i, 30)
        a = (x.mid * (1 << 64)).__floor__()
        dev = max(abs(x.lower * (1 << 64) - a), abs(x.upper * (1 << 64) - a))
        r = dev.__ceil__()
        out = (a % (1 << 64), max(r, 1))
        self._fixed[i] = out
        return out
