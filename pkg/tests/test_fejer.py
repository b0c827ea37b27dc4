from fractions import Fraction

import numpy as np
import pytest

from rigidity.angle import PrecReal
from rigidity.errors import DegreeCapExceeded
from rigidity.fejer import (
    TrigPoly,
    build_witness,
    cosine_poly,
    eval_grid,
    evaluate,
    step_coefficients,
    verify_witness,
    zero_poly,
)

# certified degrees found by the fixed search order; regression constants
DEGREES = {2: 6, 3: 8, 4: 10, 5: 13, 6: 15, 7: 18, 8: 22}


def direct(poly: TrigPoly, y: np.ndarray) -> np.ndarray:
    k = np.arange(1, poly.degree)
    return 2.0 * np.real(np.exp(2j * np.pi * np.outer(y, k)) @ poly.coeffs)


@pytest.fixture(scope="module")
def witnesses():
    return {l: build_witness(l) for l in DEGREES}


@pytest.mark.parametrize("l", sorted(DEGREES))
def test_pinned_degrees(witnesses, l):
    poly, cert = witnesses[l]
    assert cert.is_true and cert.margin.lower > 0
    assert poly.degree == DEGREES[l]


@pytest.mark.parametrize("l", sorted(DEGREES))
def test_bullets_on_a_dense_independent_grid(witnesses, l):
    poly, _ = witnesses[l]
    y = np.linspace(0, 1, 200_001)
    v = direct(poly, y)
    outside = (y > 1 / l) & (y < 1)
    assert v[outside].min() > 1
    assert np.abs(v).max() < l * l
    assert v[(y > 0.3 / l) & (y < 0.7 / l)].max() < 0  # the dip


def test_mean_zero_and_real():
    poly, _ = build_witness(3)
    v = direct(poly, np.arange(4096) / 4096)
    assert abs(v.mean()) < 1e-12
    assert poly.coefficient(-2) == poly.coefficient(2).conjugate()
    assert poly.coefficient(0) == 0 and poly.coefficient(poly.degree) == 0


def test_step_coefficients_match_quadrature():
    l, L, shrink, h = 4, 9, Fraction(1, 8), 1.5
    c = step_coefficients(l, L, shrink, h)
    n = 400_000
    y = (np.arange(n) + 0.5) / n
    d = float(shrink) / l
    w = 1 / l - 2 * d
    g = h * (1 - ((y >= d) & (y <= d + w)) / w)
    for k in range(1, L):
        ref = np.mean(g * np.exp(-2j * np.pi * k * y)) * (1 - k / L)
        assert abs(c[k - 1] - ref) < 1e-4


def test_fft_grid_matches_direct_sum():
    poly, _ = build_witness(5)
    values, err = eval_grid(poly, 512)
    assert np.max(np.abs(values - direct(poly, np.arange(512) / 512))) <= err


def test_evaluate_encloses_direct_value():
    poly, _ = build_witness(4)
    for t in (Fraction(0), Fraction(1, 7), Fraction(5, 9)):
        ball = evaluate(poly, PrecReal.from_fraction(t, 80))
        assert ball.contains(Fraction(float(direct(poly, np.array([float(t)]))[0])))


def test_counterexamples_are_rejected():
    l = 3
    # cos dips below 1 outside [0, 1/3]
    cert = verify_witness(cosine_poly(2.0), l, 512)
    assert cert.is_false and cert.detail.startswith("bullet a")
    # amplitude beyond l^2 violates the sup bound
    cert = verify_witness(cosine_poly(20.0), l, 512)
    assert cert.is_false and cert.detail.startswith("bullet b")
    assert verify_witness(zero_poly(4), l, 512).is_false


def test_grid_density_floor(witnesses):
    poly, _ = witnesses[2]
    with pytest.raises(ValueError):
        verify_witness(poly, 2, 4 * poly.degree * 2 - 1)
    _, cert = build_witness(2, grid_density=5000)
    assert cert.is_true and "grid=5000" in cert.detail


def test_degree_cap():
    with pytest.raises(DegreeCapExceeded):
        build_witness(8, degree_cap=10)


def test_csv_round_trip(witnesses):
    poly, _ = witnesses[6]
    back = TrigPoly.from_csv(poly.to_csv())
    assert back.degree == poly.degree
    assert np.array_equal(back.coeffs, poly.coeffs)
