"""Closed-form success probability and conditional duration of the race.

The honest chain (G) needs ``n`` blocks in phase one while the attacker (B)
mines ``m`` blocks, with ``m`` negative-binomially distributed. The attacker
wins immediately when ``m >= n``; otherwise it must close a deficit of
``n - m`` in a biased random walk and wins on reaching a tie.

Every function works in two modes, picked by the type of ``q``:
``Fraction`` (or ``int``) gives exact rational results, ``float`` gives
double-precision results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .numeric import DomainError, Number, binomial, is_exact, reg_incomplete_beta, stable_sum

Prob = Union[Fraction, float]

HALF = Fraction(1, 2)
# tail of the immediate-win series is dropped once its bound is this small
# relative to the accumulated value
_TAIL_RTOL = 1e-18


@dataclass(frozen=True)
class ModelParams:
    """Attacker share ``q`` and confirmation count ``n``."""

    q: Prob
    n: int

    def __post_init__(self):
        q = self.q
        if isinstance(q, bool):
            raise TypeError("q must be a number")
        if isinstance(q, int):
            q = Fraction(q)
            object.__setattr__(self, "q", q)
        elif isinstance(q, float):
            if not math.isfinite(q):
                raise DomainError(f"q must be finite, got {q!r}")
        elif not isinstance(q, Fraction):
            raise TypeError(f"q must be a Fraction or float, got {type(q).__name__}")
        if q < 0:
            raise DomainError(f"q must be non-negative, got {q}")
        if q >= HALF:
            raise DomainError(f"q must be below 1/2, got {q}")
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise TypeError("n must be an integer")
        if self.n < 0:
            raise DomainError(f"n must be non-negative, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def exact(self) -> bool:
        return isinstance(self.q, Fraction)

    @property
    def base(self) -> Prob:
        """Exponential decay base 4q(1-q)."""
        return 4 * self.q * (1 - self.q)


@dataclass(frozen=True)
class DurationStats:
    """Phase-two duration moments conditioned on attacker success."""

    expectation: Prob
    second_moment: Prob
    variance: Prob
    std_dev: float

    def as_floats(self) -> dict:
        return {
            "expectation": float(self.expectation),
            "second_moment": float(self.second_moment),
            "variance": float(self.variance),
            "std_dev": float(self.std_dev),
        }


def _require_positive_q(p: ModelParams, what: str) -> None:
    if p.q == 0:
        raise DomainError(f"{what} requires q > 0")


def negbin_pmf(q: Prob, n: int, m: int) -> Prob:
    """P(attacker has ``m`` blocks when the honest chain reaches ``n``)."""
    p = ModelParams(q, n)
    if p.n == 0:
        raise DomainError("negbin_pmf requires n >= 1 (phase one is empty for n = 0)")
    if m < 0:
        raise DomainError("m must be non-negative")
    q = p.q
    if p.exact:
        return binomial(p.n + m - 1, m) * (1 - q) ** p.n * q**m
    if q == 0.0:
        return 1.0 if m == 0 else 0.0
    log_c = math.lgamma(p.n + m) - math.lgamma(m + 1) - math.lgamma(p.n)
    return math.exp(log_c + p.n * math.log1p(-q) + m * math.log(q))


def catchup_prob(q: Prob, deficit: int) -> Prob:
    """Probability that an attacker ``deficit`` blocks behind ever ties: (q/(1-q))^L."""
    if isinstance(q, int) and not isinstance(q, bool):
        q = Fraction(q)
    if not 0 < q < HALF:
        raise DomainError(f"catch-up probability needs 0 < q < 1/2, got {q}")
    if deficit < 1:
        raise DomainError("deficit must be at least 1")
    return (q / (1 - q)) ** deficit


# ---------------------------------------------------------------------------
# exact sums

def _exact_head_sums(a: int, b: int, n: int) -> tuple[int, int, int, int]:
    """Integer-cleared partial sums over m = 0..n-1 for q = a/b.

    With c = b - a and w_m = C(n+m-1, m) b^(n-1-m) returns
    (sum w_m a^m, sum w_m c^m, sum w_m c^m L, sum w_m c^m L^2), L = n - m.
    """
    c = b - a
    bpow = [1] * n
    for i in range(1, n):
        bpow[i] = bpow[i - 1] * b
    s_a = s_c = s_l = s_ll = 0
    coef = 1
    apow = cpow = 1
    for m in range(n):
        if m:
            coef = coef * (n + m - 1) // m
            apow *= a
            cpow *= c
        w = coef * bpow[n - 1 - m]
        s_a += w * apow
        wc = w * cpow
        lag = n - m
        s_c += wc
        s_l += wc * lag
        s_ll += wc * lag * lag
    return s_a, s_c, s_l, s_ll


def _exact_all(q: Fraction, n: int) -> tuple[Fraction, Fraction, Fraction]:
    """Exact (R_n, A_n, M_n) for n >= 1."""
    a, b = q.numerator, q.denominator
    c = b - a
    s_a, s_c, s_l, s_ll = _exact_head_sums(a, b, n)
    scale = b ** (2 * n - 1)
    an = a**n
    # R = 1 - (1-q)^n sum C q^m + q^n sum C (1-q)^m, over the common denominator b^(2n-1)
    r = 1 - Fraction(c**n * s_a - an * s_c, scale)
    d = b - 2 * a
    head_l = Fraction(an * s_l, scale)
    head_ll = Fraction(an * s_ll, scale)
    numer_a = head_l * Fraction(b, d)
    # conditioned first passage from deficit L: mean L/(1-2q), variance L*4q(1-q)/(1-2q)^3
    numer_m = head_l * Fraction(4 * a * c * b, d**3) + head_ll * Fraction(b * b, d * d)
    return r, numer_a, numer_m


# ---------------------------------------------------------------------------
# float sums

def _log_binomial(a: int, b: int) -> float:
    if a <= 20000:
        return math.log(math.comb(a, b))
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def _float_sums(q: float, n: int) -> tuple[float, float, float, float, float]:
    """Scaled float sums for n >= 1 and 0 < q < 1/2.

    Returns ``(log_scale, h0, h1, h2, tail)`` where, relative to
    ``exp(log_scale)``, ``h_k`` is the catch-up sum over m < n weighted by
    ``(n-m)**k`` and ``tail`` is the immediate-win mass over m >= n.
    """
    p = 1.0 - q
    # catch-up terms q^n (1-q)^m C(n+m-1, m) increase in m over 0..n-1; scale by the last one
    log_scale = n * math.log(q) + (n - 1) * math.log1p(-q) + _log_binomial(2 * n - 2, n - 1)
    m = np.arange(n - 1, 0, -1, dtype=float)
    down = m / ((n + m - 1.0) * p)
    head = np.empty(n)
    head[0] = 1.0
    head[1:] = np.cumprod(down)
    lag = np.arange(1, n + 1, dtype=float)
    h0 = stable_sum(head)
    h1 = stable_sum(head * lag)
    h2 = stable_sum(head * lag * lag)

    # immediate-win terms (1-q)^n q^m C(n+m-1, m), m >= n, decrease from m = n
    first = p * (2 * n - 1) / n
    rho = q * (2 * n - 1) / n
    # bound: remainder after k terms <= first * rho^k / (1 - rho)
    target = _TAIL_RTOL * max(h0, first) * (1.0 - rho) / first
    k = int(math.ceil(math.log(target) / math.log(rho))) + 1 if rho > 0 else 1
    mt = np.arange(n, n + k - 1, dtype=float)
    up = (n + mt) / (mt + 1.0) * q
    tail_terms = np.empty(k)
    tail_terms[0] = first
    tail_terms[1:] = first * np.cumprod(up)
    tail = stable_sum(tail_terms)
    return log_scale, h0, h1, h2, tail


def _float_all(q: float, n: int) -> tuple[float, float, float]:
    """Float (R_n, A_n, M_n) for n >= 1, q > 0."""
    log_scale, h0, h1, h2, tail = _float_sums(q, n)
    scale = math.exp(log_scale)
    d = 1.0 - 2.0 * q
    r = scale * (h0 + tail)
    numer_a = scale * h1 / d
    numer_m = scale * (h1 * 4.0 * q * (1.0 - q) / d**3 + h2 / (d * d))
    return r, numer_a, numer_m


# ---------------------------------------------------------------------------
# public API

def rosenfeld_exact(q: Prob, n: int) -> Prob:
    """Probability R_n(q) that the attacker eventually ties the honest chain.

    In exact mode this is the three-term binomial-sum closed form in rational
    arithmetic. In float mode the same quantity is summed as catch-up mass
    plus the immediate-win tail, which avoids the cancellation in
    ``1 - big + big``.
    """
    p = ModelParams(q, n)
    if p.n == 0:
        return Fraction(1) if p.exact else 1.0
    if p.q == 0:
        return Fraction(0) if p.exact else 0.0
    if p.exact:
        return _exact_all(p.q, p.n)[0]
    return _float_all(p.q, p.n)[0]


def rosenfeld_beta(q: Prob, n: int) -> float:
    """R_n(q) as the regularized incomplete beta I_s(n, 1/2), s = 4q(1-q)."""
    p = ModelParams(q, n)
    _require_positive_q(p, "rosenfeld_beta")
    if p.n < 1:
        raise DomainError("rosenfeld_beta requires n >= 1")
    return reg_incomplete_beta(float(p.base), p.n, 0.5)


def duration_numerator(q: Prob, n: int) -> Prob:
    """A_n(q) = q^n/(1-2q) * sum_{m<n} C(n+m-1, m) (1-q)^m (n-m)."""
    p = ModelParams(q, n)
    _require_positive_q(p, "duration_numerator")
    if p.n < 1:
        raise DomainError("duration_numerator requires n >= 1")
    if p.exact:
        return _exact_all(p.q, p.n)[1]
    return _float_all(p.q, p.n)[1]


def second_moment_numerator(q: Prob, n: int) -> Prob:
    """Unnormalized conditional second moment of the phase-two duration.

    Each deficit L = n - m contributes its catch-up mass times
    ``L * 4q(1-q)/(1-2q)^3 + L^2/(1-2q)^2``, the second moment of the
    first-passage time of the success-conditioned walk.
    """
    p = ModelParams(q, n)
    _require_positive_q(p, "second_moment_numerator")
    if p.n < 1:
        raise DomainError("second_moment_numerator requires n >= 1")
    if p.exact:
        return _exact_all(p.q, p.n)[2]
    return _float_all(p.q, p.n)[2]


def duration_stats(q: Prob, n: int) -> DurationStats:
    """Conditional mean and spread of the phase-two duration given success."""
    p = ModelParams(q, n)
    zero = Fraction(0) if p.exact else 0.0
    if p.n == 0:
        return DurationStats(zero, zero, zero, 0.0)
    _require_positive_q(p, "duration_stats")
    if p.exact:
        r, numer_a, numer_m = _exact_all(p.q, p.n)
        e = numer_a / r
        m2 = numer_m / r
    else:
        # ratios taken on the scaled sums so they survive underflow of R_n itself
        _, h0, h1, h2, tail = _float_sums(p.q, p.n)
        d = 1.0 - 2.0 * p.q
        r = h0 + tail
        e = h1 / d / r
        m2 = (h1 * 4.0 * p.q * (1.0 - p.q) / d**3 + h2 / (d * d)) / r
    var = m2 - e * e
    return DurationStats(e, m2, var, math.sqrt(max(float(var), 0.0)))


def min_confirmations(q: Prob, risk: Number) -> int:
    """Smallest n with R_n(q) <= risk."""
    if isinstance(q, int) and not isinstance(q, bool):
        q = Fraction(q)
    ModelParams(q, 0)
    if not 0 < q:
        raise DomainError("min_confirmations requires q > 0")
    if not 0 < risk < 1:
        raise DomainError(f"risk must lie in (0, 1), got {risk}")
    if is_exact(q):
        from .recurrence import iter_rosenfeld

        for n, r in enumerate(iter_rosenfeld(q)):
            if r <= risk:
                return n
    # float mode: R_n is decreasing, so bracket then bisect on the direct sums
    lo, hi = 0, 1
    while rosenfeld_exact(q, hi) > risk:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if rosenfeld_exact(q, mid) > risk:
            lo = mid
        else:
            hi = mid
    return hi
