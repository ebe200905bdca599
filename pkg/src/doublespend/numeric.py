"""Exact and floating-point numeric primitives.

Exact quantities are carried as :class:`fractions.Fraction` (always reduced,
positive denominator). Float-mode quantities are plain Python floats.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction
from typing import Iterable, Union

ExactRational = Fraction
Number = Union[Fraction, float, int]

# I_x(a, b) continued fraction controls
_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


def as_exact(x: Number | str) -> Fraction:
    """Convert to a Fraction, reading floats by their shortest decimal repr.

    ``as_exact(0.1)`` is ``Fraction(1, 10)``, not the binary value of the
    double nearest 0.1.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    return Fraction(x)


def binomial(a: int, b: int) -> int:
    """C(a, b) by the multiplicative formula; 0 when b > a."""
    if a < 0 or b < 0:
        raise DomainError("binomial arguments must be non-negative")
    if b > a:
        return 0
    b = min(b, a - b)
    result = 1
    for i in range(b):
        # the running product is C(a, i+1) after this step, so the division is exact
        result = result * (a - i) // (i + 1)
    return result


def stable_sum(terms: Iterable[float]) -> float:
    """Exactly rounded sum of ``terms`` (``math.fsum``).

    If the partial sums overflow the result is +/-inf and a RuntimeWarning is
    issued rather than raising.
    """
    terms = [float(t) for t in terms]
    for t in terms:
        if not math.isfinite(t):
            raise DomainError(f"non-finite term {t!r}")
    try:
        return math.fsum(terms)
    except OverflowError:
        total = sum(terms)
        if not math.isinf(total):
            total = math.copysign(math.inf, total)
        warnings.warn("stable_sum overflowed", RuntimeWarning, stacklevel=2)
        return total


def _betacf(x: float, a: float, b: float) -> float:
    """Continued fraction for I_x(a,b) (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def _beta_front(x: float, a: float, b: float) -> float:
    log_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )
    return math.exp(log_front) / a


def reg_incomplete_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Evaluated by continued fraction, switching to ``1 - I_{1-x}(b, a)`` past
    the point ``x > (a+1)/(a+b+2)`` where the direct fraction converges slowly.
    """
    x = float(x)
    a = float(a)
    b = float(b)
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"a and b must be positive, got a={a}, b={b}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return _beta_front(x, a, b) * _betacf(x, a, b)
    y = 1.0 - x
    return 1.0 - _beta_front(y, b, a) * _betacf(y, b, a)
