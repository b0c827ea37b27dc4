"""Reference computations that share no code with the package.

Everything here goes through the ``decimal`` module at generous precision and
plain loops, so agreement with the fast paths is meaningful.
"""

from __future__ import annotations

import itertools
from decimal import Decimal, localcontext

PREC = 80


def sqrt_frac(d: int, prec: int = PREC) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = prec
        r = Decimal(d).sqrt()
        return r - int(r)


def ln_frac(p: int, prec: int = PREC) -> Decimal:
    """``frac(ln p)`` from ``ln x = 2 atanh((x-1)/(x+1))`` summed term by term."""
    with localcontext() as ctx:
        ctx.prec = prec + 10
        y = (Decimal(p) - 1) / (Decimal(p) + 1)
        y2, term, total, k = y * y, y, Decimal(0), 1
        eps = Decimal(10) ** -(prec + 5)
        while abs(term) > eps:
            total += term / k
            term *= y2
            k += 2
        r = 2 * total
        return +(r - int(r))


def norm(x: Decimal) -> Decimal:
    f = x - int(x) if x >= 0 else x - int(x) + 1
    f = f % 1
    return min(f, 1 - f)


def squarefree(count: int) -> list[int]:
    out, n = [], 2
    while len(out) < count:
        if all(n % (q * q) for q in range(2, int(n**0.5) + 1)):
            out.append(n)
        n += 1
    return out


def hits(alphas: list[Decimal], eps, lo: int, hi: int) -> list[int]:
    eps = Decimal(eps.numerator) / Decimal(eps.denominator) if hasattr(eps, "numerator") else Decimal(eps)
    with localcontext() as ctx:
        ctx.prec = PREC
        return [m for m in range(lo, hi + 1) if all(norm(m * a) < eps for a in alphas)]


def box_min(alphas: list[Decimal], K: int) -> tuple[Decimal, tuple[int, ...]]:
    best, arg = Decimal(1), None
    with localcontext() as ctx:
        ctx.prec = PREC
        for ks in itertools.product(range(-K, K + 1), repeat=len(alphas)):
            if not any(ks):
                continue
            v = norm(sum(k * a for k, a in zip(ks, alphas)))
            if v < best:
                best, arg = v, ks
    return best, arg


def partner(alpha: Decimal, target: Decimal, delta: Decimal, limit: int = 10**6) -> int:
    with localcontext() as ctx:
        ctx.prec = PREC
        for k in range(1, limit):
            if norm(k * alpha - target) < delta:
                return k
    raise AssertionError("no partner found")


def eta(positions: list[Decimal]) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = PREC
        gaps = [norm(a - b) for a, b in itertools.combinations(positions, 2)]
        return min(gaps) / 4
