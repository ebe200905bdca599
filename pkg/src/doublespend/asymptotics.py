"""Order-4 large-n expansions of R_n(q), E_n(q) and the conditional variance.

Each expansion is ``prefactor * sum_k c_k(q) / n^k``. The coefficients are
rational functions of q stored as integer polynomial factors over powers of
(2q - 1) and evaluated on demand, so an exact ``Fraction`` q gives exact
coefficients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from . import attack
from .attack import ModelParams, Prob
from .numeric import DomainError, as_exact

MAX_ORDER = 4


def _poly(coeffs: Sequence[int], q):
    """Horner evaluation, coefficients from highest degree down."""
    acc = 0
    for c in coeffs:
        acc = acc * q + c
    return acc


@dataclass(frozen=True)
class RationalCoefficient:
    """``scale * prod(numer_factors) / (2q - 1)^denom_power``."""

    scale: Fraction
    numer_factors: tuple[tuple[int, ...], ...]
    denom_power: int

    def __call__(self, q):
        num = self.scale if isinstance(q, Fraction) else float(self.scale)
        for f in self.numer_factors:
            num = num * _poly(f, q)
        return num / (2 * q - 1) ** self.denom_power


def _c(scale, *factors, power=0):
    return RationalCoefficient(Fraction(scale), tuple(tuple(f) for f in factors), power)


_Q_MINUS_1 = (1, -1)

ROSENFELD_COEFFS = (
    _c(1, (1,)),
    _c(Fraction(1, 8), (12, -12, -1), power=2),
    _c(Fraction(1, 128), (400, -800, 120, 280, 1), power=4),
    _c(Fraction(5, 1024), (1344, -4032, 112, 6496, -3444, -476, 1), power=6),
    _c(
        Fraction(21, 32768),
        (20224, -80896, -88832, 549632, -514400, 18368, 92368, 3536, -1),
        power=8,
    ),
)

# (1 - 2q)^(2k) == (2q - 1)^(2k), so every denominator here uses the 2q - 1 base
EXPECTATION_COEFFS = (
    _c(1, (1,)),
    _c(-1, (1,), power=2),
    _c(-1, (6, -6, -1), power=4),
    _c(-1, (36, -72, 12, 24, 1), power=6),
    _c(-1, (216, -648, 276, 528, -306, -66, -1), power=8),
)

VARIANCE_COEFFS = (
    _c(1, _Q_MINUS_1, (4, -3, -2), power=4),
    _c(-1, _Q_MINUS_1, (4, 2, -7), power=6),
    _c(-1, _Q_MINUS_1, (24, -12, -58, 29, 18), power=8),
    _c(-1, _Q_MINUS_1, (144, -216, -348, 444, 328, -312, -41), power=10),
    _c(-1, _Q_MINUS_1, (864, -2160, -1704, 4956, 4632, -9972, 1586, 1711, 88), power=12),
)


class Quantity(enum.Enum):
    ROSENFELD = "rosenfeld"
    EXPECTATION = "expectation"
    VARIANCE = "variance"


_COEFFS = {
    Quantity.ROSENFELD: ROSENFELD_COEFFS,
    Quantity.EXPECTATION: EXPECTATION_COEFFS,
    Quantity.VARIANCE: VARIANCE_COEFFS,
}


@dataclass(frozen=True)
class AsymptoticEval:
    base: Prob
    prefactor: Prob
    terms: tuple
    value: float
    order: int

    def recompute(self) -> float:
        return float(self.prefactor * sum(self.terms))


def _validate(q, n: int, order: int) -> ModelParams:
    p = ModelParams(q, n)
    if p.q == 0:
        raise DomainError("asymptotic expansions require q > 0")
    if p.n < 1:
        raise DomainError("asymptotic expansions require n >= 1")
    if not 0 <= order <= MAX_ORDER:
        raise DomainError(f"order must lie in 0..{MAX_ORDER}, got {order}")
    return p


def series_terms(quantity: Quantity, q: Prob, n: int, order: int) -> tuple:
    """The per-order contributions c_k(q)/n^k, k = 0..order."""
    p = _validate(q, n, order)
    inv_n = Fraction(1, p.n) if p.exact else 1.0 / p.n
    return tuple(c(p.q) * inv_n**k for k, c in enumerate(_COEFFS[quantity][: order + 1]))


def _prefactor(quantity: Quantity, p: ModelParams):
    q = p.q
    if quantity is Quantity.ROSENFELD:
        s = float(p.base)
        return s**p.n / (math.sqrt(math.pi) * (1 - 2 * float(q)) * math.sqrt(p.n))
    if quantity is Quantity.EXPECTATION:
        return (1 - q) / (1 - 2 * q) ** 2
    return Fraction(1) if p.exact else 1.0


def _evaluate(quantity: Quantity, q, n, order) -> AsymptoticEval:
    p = _validate(q, n, order)
    terms = series_terms(quantity, p.q, p.n, order)
    pre = _prefactor(quantity, p)
    return AsymptoticEval(p.base, pre, terms, float(pre * sum(terms)), order)


def rosenfeld_asymptotic(q: Prob, n: int, order: int = MAX_ORDER) -> AsymptoticEval:
    """Truncated large-n expansion of R_n(q), relative error O(n^-(order+1))."""
    return _evaluate(Quantity.ROSENFELD, q, n, order)


def expectation_asymptotic(q: Prob, n: int, order: int = MAX_ORDER) -> AsymptoticEval:
    """Truncated expansion of E_n(q); order 0 is the limit (1-q)/(1-2q)^2."""
    return _evaluate(Quantity.EXPECTATION, q, n, order)


def variance_asymptotic(q: Prob, n: int, order: int = MAX_ORDER) -> AsymptoticEval:
    """Truncated expansion of the conditional duration variance."""
    return _evaluate(Quantity.VARIANCE, q, n, order)


def _exact_value(quantity: Quantity, q: Fraction, n: int) -> Fraction:
    if quantity is Quantity.ROSENFELD:
        return attack.rosenfeld_exact(q, n)
    stats = attack.duration_stats(q, n)
    return stats.expectation if quantity is Quantity.EXPECTATION else stats.variance


def relative_residual(quantity: Quantity, q: Prob, n: int, order: int) -> float:
    """(truncation - exact) / exact, computed without float cancellation.

    ``q`` is read exactly (floats by their decimal repr). The exact value
    comes from the rational binomial sums; the comparison runs in 60-digit
    arithmetic so residuals far below double epsilon are still resolved.
    """
    qx = as_exact(q)
    _validate(qx, n, order)
    exact = _exact_value(quantity, qx, n)
    series = sum(series_terms(quantity, qx, n, order))
    with mpmath.workdps(60):
        if quantity is Quantity.ROSENFELD:
            s = mpmath.mpf(4 * qx.numerator * (qx.denominator - qx.numerator)) / qx.denominator**2
            one_minus_2q = mpmath.mpf(qx.denominator - 2 * qx.numerator) / qx.denominator
            pre = s**n / (mpmath.sqrt(mpmath.pi) * one_minus_2q * mpmath.sqrt(n))
            exact_mp = mpmath.mpf(exact.numerator) / exact.denominator
            ratio = exact_mp / pre
            series_mp = mpmath.mpf(series.numerator) / series.denominator
            return float(series_mp / ratio - 1)
        pre = _prefactor(quantity, ModelParams(qx, n))
        rel = pre * series / exact - 1
        return float(mpmath.mpf(rel.numerator) / rel.denominator)


def residual_slope(
    q: Prob,
    order: int,
    n_grid: Sequence[int],
    quantity: Quantity | str = Quantity.ROSENFELD,
) -> float:
    """Least-squares slope of log|relative residual| against log n.

    For a truncation at ``order`` the slope should approach -(order + 1).
    """
    quantity = Quantity(quantity)
    grid = sorted(int(n) for n in n_grid)
    if len(grid) < 4:
        raise DomainError("residual_slope needs at least 4 grid points")
    if grid[0] < 10:
        raise DomainError("residual_slope needs every n >= 10")
    if grid[-1] < 4 * grid[0]:
        raise DomainError("the n grid must span at least a factor of 4")
    residuals = [relative_residual(quantity, q, n, order) for n in grid]
    if any(r == 0.0 for r in residuals):
        raise ArithmeticError("degenerate residual: truncation matches the exact value")
    slope, _ = np.polyfit(np.log(grid), np.log(np.abs(residuals)), 1)
    return float(slope)
