import time
import warnings
from fractions import Fraction

import pytest

from doublespend.attack import duration_numerator, rosenfeld_exact
from doublespend.numeric import DomainError
from doublespend.recurrence import (
    DRIFT_RTOL,
    RecurrenceDriftWarning,
    TableKind,
    duration_numerator_table,
    expectation_table,
    iter_rosenfeld,
    rosenfeld_table,
)

from oracles import naive_duration_numerator, naive_rosenfeld


def test_rosenfeld_table_seeds():
    for q in [Fraction(1, 10), Fraction(3, 7)]:
        t = rosenfeld_table(q, 2)
        assert t.kind is TableKind.ROSENFELD
        assert t[0] == 1 and t[1] == 2 * q
        assert t[2] == 6 * q**2 - 4 * q**3
    assert rosenfeld_table(Fraction(1, 10), 2)[2] == Fraction(56, 1000)


def test_rosenfeld_table_entry_50():
    q = Fraction(1, 4)
    assert rosenfeld_table(q, 50)[50] == naive_rosenfeld(q, 50)


def test_duration_table_seeds_and_entry_3():
    q = Fraction(1, 10)
    t = duration_numerator_table(q, 3)
    assert t.start == 1 and t.stop == 3
    assert t[1] == q / (1 - 2 * q)
    assert t[2] == 2 * q**2 * (2 - q) / (1 - 2 * q)
    # at n = 3, q = 0.1 the recurrence reads A_3 = 1.77 A_2 - 0.54 A_1
    assert t[2] == Fraction(475, 10**4) and t[1] == Fraction(125, 1000)
    assert t[3] == Fraction(177, 100) * t[2] - Fraction(54, 100) * t[1]
    assert t[3] == Fraction(16575, 10**6)


def test_duration_table_entry_40():
    q = Fraction(1, 3)
    assert duration_numerator_table(q, 40)[40] == naive_duration_numerator(q, 40)


def test_table_indexing():
    t = rosenfeld_table(Fraction(1, 10), 5)
    assert len(t) == 6
    assert list(t)[3] == t[3]
    with pytest.raises(IndexError):
        t[6]
    a = duration_numerator_table(Fraction(1, 10), 5)
    with pytest.raises(IndexError):
        a[0]


@pytest.mark.parametrize("q", [Fraction(1, 10), Fraction(1, 4)])
def test_exact_tables_match_sums(q):
    r = rosenfeld_table(q, 60)
    a = duration_numerator_table(q, 60)
    for n in range(61):
        assert r[n] == rosenfeld_exact(q, n)
    for n in range(1, 61):
        assert a[n] == duration_numerator(q, n)


def test_table_invariants():
    r = rosenfeld_table(Fraction(2, 5), 100)
    assert all(0 <= v <= 1 for v in r)
    a = duration_numerator_table(Fraction(2, 5), 100)
    assert all(v >= 0 for v in a)


def test_expectation_table_examples():
    e = expectation_table(Fraction(1, 10), 3)
    assert e[0] == 0
    assert e[1] == Fraction(5, 8)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RecurrenceDriftWarning)
        assert expectation_table(0.1, 1)[1] == pytest.approx(0.625, rel=1e-12)
    big = expectation_table(Fraction(1, 10), 500)
    assert abs(float(big[500]) - 1.40625) < 0.01


@pytest.mark.parametrize("q", ["0.1", "0.25", "1/3", "0.49"])
def test_float_drift_measured_or_flagged(q):
    qx = Fraction(q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RecurrenceDriftWarning)
        table = rosenfeld_table(float(qx), 200)
    exact = rosenfeld_table(qx, 200)
    worst = max(abs(table[n] - float(exact[n])) / float(exact[n]) for n in range(201))
    if worst > DRIFT_RTOL:
        assert table.flagged
    else:
        assert table.drift is not None and table.drift <= DRIFT_RTOL


def test_drift_flag_warns():
    with pytest.warns(RecurrenceDriftWarning):
        t = rosenfeld_table(0.1, 100)
    assert t.flagged and t.first_drift <= 100


def test_stable_regime_not_flagged():
    with warnings.catch_warnings():
        warnings.simplefilter("error", RecurrenceDriftWarning)
        t = rosenfeld_table(0.49, 200)
    assert not t.flagged


def test_float_table_10000_under_one_second():
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RecurrenceDriftWarning)
        t = rosenfeld_table(0.3, 10_000)
    assert time.perf_counter() - start < 1.0
    assert len(t) == 10_001


def test_generator_is_unbounded():
    gen = iter_rosenfeld(Fraction(1, 10))
    values = [next(gen) for _ in range(5)]
    assert values[4] == naive_rosenfeld(Fraction(1, 10), 4)


@pytest.mark.parametrize("q", [0.5, 0.0, Fraction(1, 2)])
def test_tables_domain(q):
    with pytest.raises(DomainError):
        rosenfeld_table(q, 5)
    with pytest.raises(DomainError):
        duration_numerator_table(q, 5)


def test_table_size_preconditions():
    with pytest.raises(DomainError):
        rosenfeld_table(0.1, 0)
    with pytest.raises(DomainError):
        duration_numerator_table(0.1, 1)
