"""Second-order recurrences for R_n(q) and A_n(q).

Both sequences are P-recursive; a table of N entries costs O(N) arithmetic
operations. In exact mode the entries are identical to the binomial sums in
:mod:`doublespend.attack`.

R_n decays like (4q(1-q))^n while the recurrence's other solution does not,
so forward iteration in floating point loses relative accuracy roughly like
(4q(1-q))^-n. Float tables are checked against the direct sums and flagged
when the drift exceeds ``DRIFT_RTOL``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from . import attack
from .attack import ModelParams, Prob
from .numeric import DomainError

DRIFT_RTOL = 1e-9
_N_CHECKPOINTS = 40


class RecurrenceDriftWarning(RuntimeWarning):
    pass


class TableKind(enum.Enum):
    ROSENFELD = "rosenfeld"
    DURATION_NUMERATOR = "duration_numerator"


@dataclass(frozen=True)
class RecurrenceTable:
    """Values of one sequence indexed from ``start`` to ``start + len - 1``.

    ``drift`` is the largest relative deviation from the direct sums seen at
    the float-mode checkpoints (``None`` in exact mode); ``first_drift`` is
    the first checkpoint index past ``DRIFT_RTOL``.
    """

    q: Prob
    kind: TableKind
    start: int
    values: tuple
    drift: float | None = None
    first_drift: int | None = None

    @property
    def stop(self) -> int:
        return self.start + len(self.values) - 1

    @property
    def exact(self) -> bool:
        return isinstance(self.q, Fraction)

    @property
    def flagged(self) -> bool:
        return self.first_drift is not None

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int):
        if not self.start <= n <= self.stop:
            raise IndexError(f"index {n} outside {self.start}..{self.stop}")
        return self.values[n - self.start]

    def __iter__(self):
        return iter(self.values)


def _checked_q(q) -> Prob:
    p = ModelParams(q, 0)
    if p.q == 0:
        raise DomainError("recurrence tables require q > 0")
    return p.q


def iter_rosenfeld(q: Prob) -> Iterator[Prob]:
    """Yield R_0(q), R_1(q), ... indefinitely."""
    q = _checked_q(q)
    one = Fraction(1) if isinstance(q, Fraction) else 1.0
    prev2, prev1 = one, 2 * q
    yield prev2
    yield prev1
    qq = q * q
    c2 = 2 * q * (q - 1)
    n = 2
    while True:
        cur = (-(4 * n * qq - 4 * q * n - 6 * qq - n + 6 * q + 1) * prev1 + c2 * (2 * n - 3) * prev2) / (n - 1)
        yield cur
        prev2, prev1 = prev1, cur
        n += 1


def iter_duration_numerator(q: Prob) -> Iterator[Prob]:
    """Yield A_1(q), A_2(q), ... indefinitely."""
    q = _checked_q(q)
    prev2 = q / (1 - 2 * q)
    prev1 = 2 * q * q * (2 - q) / (1 - 2 * q)
    yield prev2
    yield prev1
    qq = q * q
    c2 = 2 * q * (q - 1)
    n = 3
    while True:
        # denominators differ between the two terms: (n-1) and (n-2)
        cur = -(4 * n * qq - 4 * q * n - 6 * qq - n + 6 * q) * prev1 / (n - 1) + c2 * (2 * n - 3) * prev2 / (n - 2)
        yield cur
        prev2, prev1 = prev1, cur
        n += 1


def _checkpoints(start: int, stop: int) -> list[int]:
    if stop < start:
        return []
    pts = {stop}
    span = stop - start + 1
    for i in range(_N_CHECKPOINTS):
        pts.add(start + int(round(span ** (i / (_N_CHECKPOINTS - 1)))) - 1)
    return sorted(p for p in pts if start <= p <= stop)


def _measure_drift(values, start, reference) -> tuple[float, int | None]:
    worst = 0.0
    first = None
    for n in _checkpoints(start, start + len(values) - 1):
        ref = reference(n)
        got = values[n - start]
        if ref == 0.0:
            dev = 0.0 if got == 0.0 else math.inf
        else:
            dev = abs(got - ref) / abs(ref)
        if not math.isfinite(got):
            dev = math.inf
        worst = max(worst, dev)
        if dev > DRIFT_RTOL and first is None:
            first = n
    return worst, first


def _build(q, kind, start, count, gen, reference, check_drift) -> RecurrenceTable:
    values = []
    for _, v in zip(range(count), gen):
        values.append(v)
    values = tuple(values)
    if isinstance(q, Fraction) or not check_drift:
        return RecurrenceTable(q, kind, start, values)
    drift, first = _measure_drift(values, start, reference)
    if first is not None:
        warnings.warn(
            f"float {kind.value} recurrence at q={q} drifts past rtol {DRIFT_RTOL:g} from n={first} "
            f"(max relative drift {drift:.3g}); use exact mode",
            RecurrenceDriftWarning,
            stacklevel=3,
        )
    return RecurrenceTable(q, kind, start, values, drift, first)


def rosenfeld_table(q: Prob, N: int, check_drift: bool = True) -> RecurrenceTable:
    """Table of R_0(q) .. R_N(q) from the second-order recurrence."""
    q = _checked_q(q)
    if N < 1:
        raise DomainError("N must be at least 1")
    return _build(
        q, TableKind.ROSENFELD, 0, N + 1, iter_rosenfeld(q), lambda n: attack.rosenfeld_exact(q, n), check_drift
    )


def duration_numerator_table(q: Prob, N: int, check_drift: bool = True) -> RecurrenceTable:
    """Table of A_1(q) .. A_N(q) from the second-order recurrence."""
    q = _checked_q(q)
    if N < 2:
        raise DomainError("N must be at least 2")
    return _build(
        q,
        TableKind.DURATION_NUMERATOR,
        1,
        N,
        iter_duration_numerator(q),
        lambda n: attack.duration_numerator(q, n),
        check_drift,
    )


def expectation_table(q: Prob, N: int) -> list:
    """E_0(q) .. E_N(q), the conditional expected phase-two durations.

    Float drift in either underlying table is reported through
    :class:`RecurrenceDriftWarning`.
    """
    q = _checked_q(q)
    if N < 1:
        raise DomainError("N must be at least 1")
    r = rosenfeld_table(q, N)
    a = duration_numerator_table(q, max(N, 2))
    zero = Fraction(0) if isinstance(q, Fraction) else 0.0
    return [zero] + [a[n] / r[n] for n in range(1, N + 1)]
