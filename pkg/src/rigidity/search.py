"""Search kernels: simultaneous approximants, divisor-avoiding approximants,
membership in the obstruction set A(window, eps, I, indices), and the box
infimum of small linear forms.

The window scans use a vectorised fixed-point representation: ``alpha`` is
held as ``A / 2**64`` with a certified error of ``R`` ulps, and the product
``m * A`` is formed modulo ``2**64`` with wrapping ``uint64`` arithmetic, which
is exact.  The position of ``m * alpha`` on the circle is therefore known to
within ``m * R`` ulps.  Candidates the fixed-point bound cannot decide are
re-checked one by one with :class:`~rigidity.angle.PrecReal` at escalating
precision.

Argument order for the obstruction set is canonical here:
``(theta, window, eps, interval, indices)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .angle import CertifiedBool, Outcome, PrecReal, dist_to_int, frac, is_less
from .errors import BoxTooLarge, PrecisionExhausted
from .family import AlphaFamily

CHUNK = 1 << 20
TWO64 = 1 << 64
DEFAULT_BOX_BUDGET = 4_000_000


@dataclass(frozen=True)
class SearchWindow:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 1 or self.hi < self.lo:
            raise ValueError(f"invalid window [{self.lo}, {self.hi}]")

    def __len__(self):
        return self.hi - self.lo + 1

    def __contains__(self, m: int) -> bool:
        return self.lo <= m <= self.hi


@dataclass
class HitList:
    window: SearchWindow
    eps: Fraction
    indices: list[int]
    hits: list[int] = field(default_factory=list)

    def __iter__(self):
        return iter(self.hits)

    def __len__(self):
        return len(self.hits)

    def __contains__(self, m):
        return m in set(self.hits)


def _ceil_scaled(eps: Fraction) -> int:
    num = eps.numerator << 64
    return -((-num) // eps.denominator)


def certify_approximant(
    family: AlphaFamily, indices: Sequence[int], eps: Fraction, m: int, digits: int = 40
) -> bool:
    """Certified ``||m * alpha_i|| < eps`` for all ``i``; escalates digits until decided."""
    pending = list(indices)
    while pending:
        if digits > family.digit_cap:
            raise PrecisionExhausted(
                f"cannot decide ||{m} alpha|| < {eps} within the digit cap",
                operation="search.simultaneous_hits",
                m=m,
            )
        still = []
        for i in pending:
            out = is_less(dist_to_int(family.alpha(i, digits) * m), eps)
            if out is Outcome.FALSE:
                return False
            if out is Outcome.UNDECIDED:
                still.append(i)
        pending = still
        digits *= 2
    return True


def _scan_chunk(lo: int, hi: int, fixed: list[tuple[int, int]], E: int) -> tuple[np.ndarray, np.ndarray]:
    cand = np.arange(lo, hi + 1, dtype=np.uint64)
    unsure = []
    zero = np.uint64(0)
    for A, R in fixed:
        if cand.size == 0:
            break
        x = cand * np.uint64(A)
        d = np.minimum(x, zero - x)
        err = np.uint64(hi * R)
        maybe = d < np.uint64(E) + err
        sure = d + err < np.uint64(E)
        unsure.append(cand[maybe & ~sure])
        cand = cand[sure]
    undecided = np.unique(np.concatenate(unsure)) if unsure else np.empty(0, dtype=np.uint64)
    return cand, undecided


def _chunks(window: SearchWindow, chunk: int):
    lo = window.lo
    while lo <= window.hi:
        hi = min(window.hi, lo + chunk - 1)
        yield lo, hi
        lo = hi + 1


def simultaneous_hits(
    family: AlphaFamily,
    indices: Sequence[int],
    eps,
    window: SearchWindow,
    *,
    threads: int = 1,
    chunk: int = CHUNK,
) -> HitList:
    """All ``m`` in ``window`` with certified ``||m alpha_i|| < eps`` for every listed ``i``.

    The window is split into disjoint chunks which may be scanned concurrently;
    results are merged in chunk order so the output is schedule independent.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    indices = list(indices)
    if window.hi >= 1 << 40:
        raise ValueError("window too large for the fixed-point kernel")
    # indices with eps > 1/2 impose nothing: ||.|| <= 1/2 always
    active = indices if eps <= Fraction(1, 2) else []
    if not active:
        return HitList(window, eps, indices, list(range(window.lo, window.hi + 1)))
    fixed = [family.fixed64(i) for i in active]
    E = _ceil_scaled(eps)
    ranges = list(_chunks(window, chunk))
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda r: _scan_chunk(r[0], r[1], fixed, E), ranges))
    else:
        parts = [_scan_chunk(lo, hi, fixed, E) for lo, hi in ranges]
    hits: list[int] = []
    for sure, undecided in parts:
        merged = sure.tolist()
        if undecided.size:
            extra = [int(m) for m in undecided.tolist() if certify_approximant(family, active, eps, int(m))]
            merged = sorted(set(merged).union(extra))
        hits.extend(int(m) for m in merged)
    return HitList(window, eps, indices, hits)


def reference_hits(
    family: AlphaFamily, indices: Sequence[int], eps, window: SearchWindow, digits: int = 40
) -> HitList:
    """Naive single-threaded loop over the window with ball arithmetic only."""
    eps = Fraction(eps)
    indices = list(indices)
    family.refine_for(indices, window.hi, Fraction(1, 10**10))
    hits = [m for m in range(window.lo, window.hi + 1) if certify_approximant(family, indices, eps, m, digits)]
    return HitList(window, eps, indices, hits)


def nondivisible_hit(
    family: AlphaFamily, indices: Sequence[int], eps, divisor: int, window: SearchWindow, *, threads: int = 1
) -> int | None:
    """Smallest certified approximant in ``window`` not divisible by ``divisor``; ``None`` if absent."""
    if divisor < 2:
        raise ValueError("divisor must be >= 2")
    for lo, hi in _chunks(window, CHUNK):
        for m in simultaneous_hits(family, indices, eps, SearchWindow(lo, hi), threads=threads).hits:
            if m % divisor:
                return m
    return None


# obstruction set ---------------------------------------------------------


def _arc_vs_interval(lo: Fraction, hi: Fraction, a: Fraction, b: Fraction) -> Outcome:
    """Is the arc ``[lo, hi]`` (mod 1, length < 1) inside ``[a, b)``?  TRUE / FALSE / UNDECIDED."""
    meets = False
    for shift in (-1, 0, 1):
        a2, b2 = a + shift, b + shift
        if a2 <= lo and hi < b2:
            return Outcome.TRUE
        if hi >= a2 and lo < b2:
            meets = True
    return Outcome.UNDECIDED if meets else Outcome.FALSE


def in_A(
    theta: PrecReal,
    window: SearchWindow,
    eps,
    interval: tuple,
    indices: Sequence[int],
    family: AlphaFamily,
    *,
    digits_cap: int | None = None,
) -> CertifiedBool:
    """Certify that no approximant ``m`` in the window puts ``frac(m theta)`` inside ``[a, b)``.

    ``FALSE`` carries the first offending ``m`` as witness.  ``UNDECIDED`` is
    returned when some approximant lands on the boundary of the interval at the
    precision ``theta`` was supplied with.
    """
    a, b = Fraction(interval[0]), Fraction(interval[1])
    if not (0 <= a < b <= 1):
        raise ValueError("interval must satisfy 0 <= a < b <= 1")
    hits = simultaneous_hits(family, indices, eps, window)
    undecided = None
    for m in hits.hits:
        pos = frac(theta * m)
        where = _arc_vs_interval(pos.lower, pos.upper, a, b)
        if where is Outcome.TRUE:
            return CertifiedBool(Outcome.FALSE, None, witness=m, detail=f"frac({m} theta) in [{a}, {b})")
        if where is Outcome.UNDECIDED and undecided is None:
            undecided = m
    if undecided is not None:
        return CertifiedBool(Outcome.UNDECIDED, None, witness=undecided, detail="boundary case")
    return CertifiedBool(Outcome.TRUE, None, detail=f"{len(hits)} approximants checked")


# box infimum -------------------------------------------------------------


@dataclass(frozen=True)
class BoxResult:
    value: PrecReal
    argmin: tuple[int, ...]


def _half_box(fixed: list[tuple[int, int]], K: int) -> np.ndarray:
    """Fixed-point sums ``sum k_j A_j mod 2**64`` over ``k in [-K, K]^h`` (row-major)."""
    vals = np.zeros(1, dtype=np.uint64)
    ks = np.arange(-K, K + 1, dtype=np.int64)
    for A, _ in fixed:
        step = ks.astype(np.uint64) * np.uint64(A)
        vals = (vals[:, None] + step[None, :]).ravel()
    return vals


def _decode(flat: int, h: int, K: int) -> tuple[int, ...]:
    width = 2 * K + 1
    out = []
    for _ in range(h):
        flat, r = divmod(flat, width)
        out.append(r - K)
    return tuple(reversed(out))


def _positive_first_mask(h: int, K: int) -> np.ndarray:
    """Rows whose first nonzero coordinate is positive (zero row excluded)."""
    width = 2 * K + 1
    n = width**h
    mask = np.zeros(n, dtype=bool)
    decided = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    for j in range(h):
        digit = (idx // width ** (h - 1 - j)) % width - K
        newly = ~decided & (digit != 0)
        mask |= newly & (digit > 0)
        decided |= newly
    return mask


def _circ(x: np.ndarray) -> np.ndarray:
    return np.minimum(x, np.uint64(0) - x)


def box_search(
    family: AlphaFamily, indices: Sequence[int], K: int, *, budget: int = DEFAULT_BOX_BUDGET
) -> BoxResult:
    """Certified ``min ||sum k_i alpha_i||`` over nonzero ``k`` with ``|k_i| <= K``.

    Exhaustive, organised as a meet-in-the-middle: the tuple is split into two
    halves, one half is sorted and the nearest partner of every point of the
    other half is located by binary search.  Sign symmetry ``k -> -k`` is used
    to keep only half-tuples whose first nonzero coordinate is positive.
    """
    indices = list(indices)
    n = len(indices)
    if n < 1 or K < 1:
        raise ValueError("need at least one index and K >= 1")
    h = n // 2
    width = 2 * K + 1
    if width ** max(h, n - h) > budget:
        raise BoxTooLarge(
            f"box (2*{K}+1)^{n} exceeds budget {budget}", operation="search.box_infimum", K=K, n=n
        )
    fixed = [family.fixed64(i) for i in indices]
    left, right = fixed[:h], fixed[h:]
    B = _half_box(right, K)
    best = None  # (distance, left_flat, right_flat)

    # part 1: left half zero, right half nonzero (first nonzero positive)
    rmask = _positive_first_mask(n - h, K)
    rd = _circ(B[rmask])
    j = int(np.argmin(rd))
    best = (int(rd[j]), None, int(np.flatnonzero(rmask)[j]))

    # part 2: left half nonzero with first nonzero positive, right half anything
    if h:
        Avals = _half_box(left, K)
        lmask = _positive_first_mask(h, K)
        lflat = np.flatnonzero(lmask)
        order = np.argsort(B, kind="stable")
        Bs = B[order]
        targets = np.uint64(0) - Avals[lmask]
        pos = np.searchsorted(Bs, targets)
        cand_lo = (pos - 1) % Bs.size
        cand_hi = pos % Bs.size
        d_lo = _circ(Bs[cand_lo] - targets)
        d_hi = _circ(Bs[cand_hi] - targets)
        use_hi = d_hi < d_lo
        dist = np.where(use_hi, d_hi, d_lo)
        pick = np.where(use_hi, cand_hi, cand_lo)
        a = int(np.argmin(dist))
        if int(dist[a]) < best[0]:
            best = (int(dist[a]), int(lflat[a]), int(order[pick[a]]))

    d, lf, rf = best
    k_left = _decode(lf, h, K) if lf is not None else (0,) * h
    k_right = _decode(rf, n - h, K)
    # every tuple's fixed-point sum is off by at most sum |k_j| R_j ulps
    E = sum(K * R for _, R in fixed)
    lo, hi = max(d - E, 0), d + E
    value = PrecReal(lo + hi, -65, hi - lo)
    return BoxResult(value, k_left + k_right)


def box_infimum(family: AlphaFamily, indices: Sequence[int], K: int, *, budget: int = DEFAULT_BOX_BUDGET) -> PrecReal:
    return box_search(family, indices, K, budget=budget).value
