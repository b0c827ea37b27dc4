"""Mean-zero trigonometric polynomials that exceed 1 off ``[0, 1/l]`` and stay
below ``l**2`` in modulus everywhere, with a rigorous grid certificate.

Construction: take the mean-zero step function

    g = c * (1 - (1/w) * 1_J),   J = [delta, 1/l - delta],  w = |J|,

and convolve it with the Fejer kernel of order L, which multiplies the k-th
Fourier coefficient by ``1 - |k|/L``.  The Fejer kernel is a probability
density, so ``|g * F_L| <= sup|g| = c (1/w - 1)``; pulling the dip strictly
inside ``[0, 1/l]`` leaves room for the smoothed transition, which is why the
polynomial can exceed 1 right up to the endpoints.

Certification evaluates the polynomial on a uniform grid of G points and uses
the Lipschitz bound ``|phi'| <= 2 pi sum |k phi_k|`` to cover the gaps, plus an
explicit bound on floating-point evaluation error.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .angle import CertifiedBool, Outcome, PrecReal, frac
from .errors import DegreeCapExceeded

_U = 2.0**-53
SHRINKS = (Fraction(1, 8), Fraction(1, 4), Fraction(3, 8))


@dataclass(frozen=True)
class TrigPoly:
    """Real trigonometric polynomial ``sum_{0<|k|<L} c_k e^{2 pi i k y}``.

    Only ``c_1 .. c_{L-1}`` are stored; ``c_{-k}`` is the complex conjugate, so
    values are real and the constant term is absent by construction.
    """

    degree: int
    coeffs: np.ndarray  # complex, length degree - 1
    recipe: dict | None = None

    def __post_init__(self):
        if self.degree < 1 or len(self.coeffs) != self.degree - 1:
            raise ValueError("coefficient array must have length degree - 1")

    def coefficient(self, k: int) -> complex:
        if k == 0 or abs(k) >= self.degree:
            return 0j
        c = complex(self.coeffs[abs(k) - 1])
        return c if k > 0 else c.conjugate()

    @property
    def abs_sum(self) -> float:
        """``sum_{0<|k|<L} |c_k|``, rounded up."""
        return 2.0 * float(np.sum(np.abs(self.coeffs))) * (1 + 1e-12)

    @property
    def slope(self) -> float:
        """Lipschitz constant ``2 pi sum_{0<|k|<L} |k c_k|``, rounded up."""
        k = np.arange(1, self.degree)
        return 4.0 * math.pi * float(np.sum(k * np.abs(self.coeffs))) * (1 + 1e-12)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "re", "im"])
        for k in range(-(self.degree - 1), self.degree):
            if k == 0:
                continue
            c = self.coefficient(k)
            w.writerow([k, repr(c.real), repr(c.imag)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrigPoly":
        rows = list(csv.DictReader(io.StringIO(text)))
        pos = {int(r["k"]): complex(float(r["re"]), float(r["im"])) for r in rows if int(r["k"]) > 0}
        L = max(pos) + 1 if pos else 1
        return cls(L, np.array([pos.get(k, 0j) for k in range(1, L)], dtype=complex))


def cosine_poly(amplitude: float) -> TrigPoly:
    """``amplitude * cos(2 pi y)``."""
    return TrigPoly(2, np.array([amplitude / 2], dtype=complex))


def zero_poly(degree: int = 2) -> TrigPoly:
    return TrigPoly(degree, np.zeros(degree - 1, dtype=complex))


def step_coefficients(l: int, L: int, shrink: Fraction, height: float) -> np.ndarray:
    """Fejer-smoothed coefficients of ``height * (1 - 1_J / w)``, ``J = [shrink/l, (1-shrink)/l]``."""
    delta = float(shrink) / l
    w = 1.0 / l - 2 * delta
    k = np.arange(1, L)
    hat = -(height / w) * (np.exp(-2j * np.pi * k * delta) - np.exp(-2j * np.pi * k * (delta + w))) / (2j * np.pi * k)
    return hat * (1 - k / L)


def eval_grid(poly: TrigPoly, G: int) -> tuple[np.ndarray, float]:
    """Values at ``j/G`` for ``j < G`` via FFT, and a bound on their rounding error."""
    if G <= poly.degree:
        raise ValueError("grid must be finer than the degree")
    X = np.zeros(G, dtype=complex)
    X[1 : poly.degree] = poly.coeffs
    values = 2.0 * np.real(np.fft.ifft(X) * G)
    # generous FFT error bound: 2 * sqrt(G) * ||c||_2 * (log2 G + 1) * 16u
    norm2 = float(np.linalg.norm(poly.coeffs))
    err = 2.0 * math.sqrt(G) * norm2 * (math.log2(G) + 1) * 16 * _U + 8 * _U * poly.abs_sum
    return values, err


def evaluate(poly: TrigPoly, y: PrecReal) -> PrecReal:
    """Value at ``y`` with the input radius and floating-point error folded in."""
    if poly.degree == 1 or not np.any(poly.coeffs):
        return PrecReal(0, 0, 0)
    yf = frac(y)
    t = float(yf.mid)
    k = np.arange(1, poly.degree)
    phase = np.exp(2j * np.pi * k * t)
    value = 2.0 * float(np.real(np.sum(poly.coeffs * phase)))
    L = poly.degree
    fp_err = poly.abs_sum * _U * (8 * math.pi * L + 64 + 2 * L)
    arg_err = float(yf.rad) + abs(t - float(yf.mid)) + _U
    bound = poly.slope * arg_err + fp_err
    return PrecReal.from_float(value) + PrecReal.from_bounds(-Fraction(bound), Fraction(bound), 80)


def verify_witness(poly: TrigPoly, l: int, grid_density: int) -> CertifiedBool:
    """Certify ``phi(y) > 1`` off ``[0, 1/l]`` and ``|phi(y)| < l**2`` on all of T.

    The ``|phi| < l**2`` bound is checked first; a ``FALSE`` names the violated
    bound in ``detail`` and the offending grid point in ``witness``.
    """
    if grid_density < 4 * poly.degree * l:
        raise ValueError("grid_density must be at least 4 * L * l")
    G = grid_density
    values, err = eval_grid(poly, G)
    lam = poly.slope / G
    slack = err + lam

    peak = int(np.argmax(np.abs(values)))
    margin_b = l * l - abs(values[peak]) - slack
    if not margin_b > 0:
        return CertifiedBool(
            Outcome.FALSE, PrecReal.from_float(margin_b), witness=Fraction(peak, G), detail="bullet b: |phi| < l^2"
        )

    # every y outside [0, 1/l] is within half a step of a node in [1/l - h/2, 1]
    j0 = -((l - 2 * G) // (2 * l))
    exterior = np.concatenate([values[j0:], values[:1]])
    idx = np.concatenate([np.arange(j0, G), [0]])
    low = int(np.argmin(exterior))
    margin_a = exterior[low] - slack - 1.0
    if not margin_a > 0:
        return CertifiedBool(
            Outcome.FALSE,
            PrecReal.from_float(margin_a),
            witness=Fraction(int(idx[low]), G),
            detail="bullet a: phi > 1 outside [0, 1/l]",
        )
    return CertifiedBool(
        Outcome.TRUE,
        PrecReal.from_float(min(margin_a, margin_b)),
        detail=f"grid={G} lipschitz={lam:.3g} fp_err={err:.3g}",
    )


def certification_grid(poly: TrigPoly, l: int, minimum: int = 0) -> int:
    """Grid size keeping the Lipschitz term at or below 1/32."""
    return max(minimum, 8 * poly.degree * l, math.ceil(32 * poly.slope) + 1)


def build_witness(l: int, grid_density: int = 0, *, degree_cap: int = 4096) -> tuple[TrigPoly, CertifiedBool]:
    """First certified polynomial for ``l`` in a fixed search order.

    Degrees ``L = 2, 3, ...`` are tried in turn; for each, the dip shrink
    ``delta = shrink / l`` runs over :data:`SHRINKS` and the height ``c = 1 + rho``
    over ``rho = 1/16, 1/8, ...`` while ``c (1/w - 1) < l**2``.  ``grid_density``
    is a floor for the certification grid.  The returned degree only depends on
    ``l`` and this recipe.
    """
    if l < 2:
        raise ValueError("l must be >= 2")
    for L in range(2, degree_cap + 1):
        for shrink in SHRINKS:
            w = 1.0 / l - 2 * float(shrink) / l
            cap = l * l / (1.0 / w - 1.0)
            rho = Fraction(1, 16)
            while 1 + rho < cap:
                height = 1 + rho
                poly = TrigPoly(
                    L,
                    step_coefficients(l, L, shrink, float(height)),
                    {"l": l, "shrink": str(shrink), "height": str(height)},
                )
                G = certification_grid(poly, l, grid_density)
                cert = verify_witness(poly, l, G)
                if cert.is_true:
                    recipe = dict(poly.recipe, grid_density=G)
                    return TrigPoly(L, poly.coeffs, recipe), cert
                rho *= 2
    raise DegreeCapExceeded(f"no certified witness for l={l} below degree {degree_cap}", operation="fejer.build_witness")
