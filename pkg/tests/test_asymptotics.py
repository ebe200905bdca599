import math
from fractions import Fraction

import pytest

from doublespend.asymptotics import (
    EXPECTATION_COEFFS,
    ROSENFELD_COEFFS,
    VARIANCE_COEFFS,
    Quantity,
    expectation_asymptotic,
    relative_residual,
    residual_slope,
    rosenfeld_asymptotic,
    variance_asymptotic,
)
from doublespend.attack import duration_stats, rosenfeld_exact
from doublespend.numeric import DomainError

GRID = [50, 100, 200, 400]


def test_rosenfeld_order_zero_is_leading_factor():
    for q, n in [(0.1, 10), (0.25, 37), (0.4, 200)]:
        s = 4 * q * (1 - q)
        expected = s**n / (math.sqrt(math.pi) * (1 - 2 * q) * math.sqrt(n))
        ev = rosenfeld_asymptotic(q, n, 0)
        assert ev.value == pytest.approx(expected, rel=1e-14)
        assert ev.base == pytest.approx(s)
        assert 0 < ev.base < 1


def test_first_rosenfeld_coefficient():
    assert ROSENFELD_COEFFS[1](0.1) == pytest.approx(-0.40625, rel=1e-14)
    assert ROSENFELD_COEFFS[1](Fraction(1, 10)) == Fraction(-40625, 100000)


def test_order_four_beats_order_zero_at_100():
    exact = float(rosenfeld_exact(Fraction(1, 10), 100))
    err0 = abs(rosenfeld_asymptotic(0.1, 100, 0).value - exact) / exact
    err4 = abs(rosenfeld_asymptotic(0.1, 100, 4).value - exact) / exact
    assert err4 < err0


def test_expectation_examples():
    assert expectation_asymptotic(0.1, 100, 0).value == pytest.approx(1.40625, rel=1e-14)
    ev = expectation_asymptotic(0.1, 100, 1)
    correction = ev.prefactor * ev.terms[1]
    assert correction == pytest.approx(-1.40625 / (0.64 * 100), rel=1e-13)
    assert correction == pytest.approx(-0.02197, abs=1e-5)
    for k in range(5):
        assert expectation_asymptotic(0.1, 10**9, k).value == pytest.approx(1.40625, rel=1e-8)


def test_variance_order_zero():
    # leading term of the expansion, (q-1)(4q^2-3q-2)/(2q-1)^4
    assert variance_asymptotic(0.1, 100, 0).value == pytest.approx(4.9658203125, rel=1e-14)
    assert variance_asymptotic(Fraction(1, 10), 100, 0).value == 4.9658203125
    assert variance_asymptotic(1e-9, 100, 0).value == pytest.approx(2.0, rel=1e-7)


def test_variance_order_four_beats_order_zero_at_500():
    exact = float(duration_stats(Fraction(1, 4), 500).variance)
    err0 = abs(variance_asymptotic(0.25, 500, 0).value - exact)
    err4 = abs(variance_asymptotic(0.25, 500, 4).value - exact)
    assert err4 < err0


def test_eval_recomputable():
    for fn in (rosenfeld_asymptotic, expectation_asymptotic, variance_asymptotic):
        for order in range(5):
            ev = fn(0.2, 60, order)
            assert ev.order == order
            assert len(ev.terms) == order + 1
            assert ev.recompute() == pytest.approx(ev.value, rel=1e-15)


def test_coefficients_representation_independent():
    reps = [Fraction(1, 10), Fraction(2, 20), Fraction("0.1")]
    for family in (ROSENFELD_COEFFS, EXPECTATION_COEFFS, VARIANCE_COEFFS):
        for c in family:
            values = {c(q) for q in reps}
            assert len(values) == 1
            assert c(0.1) == pytest.approx(float(values.pop()), rel=1e-14)


@pytest.mark.parametrize("fn", [rosenfeld_asymptotic, expectation_asymptotic, variance_asymptotic])
def test_domain(fn):
    with pytest.raises(DomainError):
        fn(0.5, 100, 0)
    with pytest.raises(DomainError):
        fn(0.1, 0, 0)
    with pytest.raises(DomainError):
        fn(0.1, 100, 5)


def test_residual_slope_order_zero():
    assert residual_slope(0.1, 0, GRID) == pytest.approx(-1, abs=0.3)


def test_residual_slope_expectation_order_four():
    assert residual_slope(0.1, 4, GRID, Quantity.EXPECTATION) == pytest.approx(-5, abs=0.7)


@pytest.mark.parametrize("quantity", list(Quantity))
@pytest.mark.parametrize("order", range(5))
def test_residual_slopes_all_orders(quantity, order):
    assert residual_slope(0.1, order, GRID, quantity) == pytest.approx(-(order + 1), abs=0.3)


def test_residual_slope_preconditions():
    with pytest.raises(DomainError):
        residual_slope(0.1, 0, [50, 100, 400])
    with pytest.raises(DomainError):
        residual_slope(0.1, 0, [5, 10, 20, 40])
    with pytest.raises(DomainError):
        residual_slope(0.1, 0, [50, 60, 70, 80])


@pytest.mark.parametrize("q", [0.05, 0.1, 0.2])
def test_monotone_refinement(q):
    means = [sum(abs(relative_residual(Quantity.ROSENFELD, q, n, k)) for n in GRID) / len(GRID) for k in range(5)]
    assert all(b < a for a, b in zip(means, means[1:]))


@pytest.mark.parametrize("q", [Fraction(1, 10), Fraction(1, 4)])
def test_expectation_limit_bound(q):
    exact = float(duration_stats(q, 500).expectation)
    limit = expectation_asymptotic(q, 500, 0).value
    ev = expectation_asymptotic(q, 500, 1)
    first = abs(float(ev.prefactor * ev.terms[1]))
    assert abs(exact - limit) < 2 * first


def test_variance_limit_close_to_exact_at_500():
    exact = float(duration_stats(Fraction(1, 10), 500).variance)
    assert abs(variance_asymptotic(0.1, 500, 0).value - exact) < 0.1
