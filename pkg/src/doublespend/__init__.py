"""Exact, recursive, asymptotic and simulated analysis of double-spend races."""

from .asymptotics import (
    AsymptoticEval,
    Quantity,
    expectation_asymptotic,
    residual_slope,
    rosenfeld_asymptotic,
    variance_asymptotic,
)
from .attack import (
    DurationStats,
    ModelParams,
    catchup_prob,
    duration_numerator,
    duration_stats,
    min_confirmations,
    negbin_pmf,
    rosenfeld_beta,
    rosenfeld_exact,
    second_moment_numerator,
)
from .numeric import DomainError, binomial, reg_incomplete_beta, stable_sum
from .recurrence import (
    RecurrenceDriftWarning,
    RecurrenceTable,
    TableKind,
    duration_numerator_table,
    expectation_table,
    rosenfeld_table,
)
from .simulate import ConfigError, SimConfig, SimOutcome, run_race, run_race_sharded

__version__ = "0.1.0"
