"""Monte Carlo simulation of the two-phase double-spend race.

Phase one draws blocks one at a time (attacker with probability q) until the
honest chain has ``n``. If the attacker then has ``m >= n`` blocks it wins
with phase-two duration 0. Otherwise phase two is a +/-1 walk on the deficit
starting at ``n - m``; the attacker wins on reaching 0 (a tie) and gives up
once the deficit has grown ``max_deficit`` beyond where it started.

Random streams are Philox generators keyed by ``SeedSequence(seed,
spawn_key=(shard,))``, so a shard's results depend only on (seed, shard
index, trial count), never on thread scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .attack import ModelParams
from .numeric import DomainError

TRUNCATION_BIAS = 1e-12
MAX_DEFICIT_CAP = 2000
CHUNK = 1 << 18


class ConfigError(ValueError):
    """Invalid simulation configuration (as opposed to an invalid model parameter)."""


def default_max_deficit(q: float) -> int:
    """Smallest D with (q/(1-q))^D < 1e-12, capped at 2000."""
    q = float(q)
    if q <= 0.0:
        return 1
    ratio = q / (1.0 - q)
    d = math.floor(math.log(TRUNCATION_BIAS) / math.log(ratio)) + 1
    while ratio**d >= TRUNCATION_BIAS:
        d += 1
    return min(d, MAX_DEFICIT_CAP)


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    trials: int
    seed: int
    max_deficit: int | None = None

    def __post_init__(self):
        if not isinstance(self.params, ModelParams):
            raise TypeError("params must be a ModelParams")
        if self.params.q == 0:
            raise DomainError("simulation requires q > 0")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.max_deficit is None:
            object.__setattr__(self, "max_deficit", default_max_deficit(self.params.q))
        elif self.max_deficit < 1:
            raise ConfigError("max_deficit must be positive")


@dataclass(frozen=True)
class GameBatch:
    """Per-trial results: success flag, phase-two start deficit n - m, duration."""

    success: np.ndarray
    deficit: np.ndarray
    duration: np.ndarray


def make_rng(seed: int, shard: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(shard,))))


def simulate_games(q: float, n: int, size: int, rng: np.random.Generator, max_deficit: int) -> GameBatch:
    """Play ``size`` independent games block by block."""
    q = float(q)
    honest = np.zeros(size, dtype=np.int64)
    attacker = np.zeros(size, dtype=np.int64)
    idx = np.arange(size) if n > 0 else np.arange(0)
    while idx.size:
        hit = rng.random(idx.size) < q
        attacker[idx[hit]] += 1
        honest[idx[~hit]] += 1
        idx = idx[honest[idx] < n]

    start = n - attacker
    success = start <= 0
    duration = np.zeros(size, dtype=np.int64)
    deficit = start.copy()
    give_up = start + max_deficit
    idx = np.flatnonzero(~success)
    while idx.size:
        hit = rng.random(idx.size) < q
        deficit[idx] += np.where(hit, -1, 1)
        duration[idx] += 1
        cur = deficit[idx]
        won = cur == 0
        success[idx[won]] = True
        idx = idx[~won & (cur < give_up[idx])]
    return GameBatch(success, start, duration)


@dataclass(frozen=True)
class SimOutcome:
    """Aggregated race statistics; duration moments are over successful trials only."""

    successes: int
    trials: int
    success_rate: float
    rate_std_err: float
    duration_mean: float
    duration_mean_std_err: float
    duration_second_moment: float
    duration_variance: float
    duration_variance_std_err: float
    seed: int
    shards: int = 1
    max_deficit: int = 0
    q: float = 0.0
    n: int = 0
    # exact power sums of successful durations, d^1..d^4; kept for merging
    power_sums: tuple[int, int, int, int] = field(default=(0, 0, 0, 0), repr=False)

    @classmethod
    def from_sums(cls, successes, trials, power_sums, *, seed, shards, max_deficit, q, n) -> "SimOutcome":
        k = successes
        p = successes / trials
        rate_se = math.sqrt(p * (1.0 - p) / trials)
        s1, s2, s3, s4 = power_sums
        if k == 0:
            nan = math.nan
            return cls(k, trials, p, rate_se, nan, nan, nan, nan, nan, seed, shards, max_deficit, float(q), n, power_sums)
        mean = Fraction(s1, k)
        second = Fraction(s2, k)
        pop_var = second - mean * mean
        var = pop_var * k / (k - 1) if k > 1 else Fraction(0)
        central4 = Fraction(s4, k) - 4 * mean * Fraction(s3, k) + 6 * mean**2 * second - 3 * mean**4
        mean_se = math.sqrt(float(var) / k)
        var_se = math.sqrt(max(float(central4 - pop_var * pop_var), 0.0) / k)
        return cls(
            k, trials, p, rate_se,
            float(mean), mean_se, float(second), float(var), var_se,
            seed, shards, max_deficit, float(q), n, power_sums,
        )

    def confidence_intervals(self, z: float = 1.96) -> dict:
        def ci(v, se):
            return [v - z * se, v + z * se]

        return {
            "success_rate": ci(self.success_rate, self.rate_std_err),
            "duration_mean": ci(self.duration_mean, self.duration_mean_std_err),
            "duration_variance": ci(self.duration_variance, self.duration_variance_std_err),
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("power_sums")
        d["confidence_intervals_95"] = self.confidence_intervals()
        return d


def _shard_sums(q, n, trials, seed, shard, max_deficit) -> tuple[int, tuple[int, int, int, int]]:
    rng = make_rng(seed, shard)
    successes = 0
    sums = [0, 0, 0, 0]
    done = 0
    while done < trials:
        size = min(CHUNK, trials - done)
        batch = simulate_games(q, n, size, rng, max_deficit)
        d = batch.duration[batch.success]
        successes += int(d.size)
        p = d.copy()
        for i in range(4):
            sums[i] += int(p.sum())
            if i < 3:
                p *= d
        done += size
    return successes, tuple(sums)


def _split(trials: int, shards: int) -> list[int]:
    base, extra = divmod(trials, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def run_race_sharded(config: SimConfig, shards: int = 1, workers: int | None = None) -> SimOutcome:
    """Run the trials split over independent shard streams and merge."""
    if isinstance(shards, bool) or not isinstance(shards, int) or shards < 1:
        raise ConfigError(f"shards must be a positive integer, got {shards!r}")
    p = config.params
    counts = _split(config.trials, shards)
    jobs = [(p.q, p.n, c, config.seed, i, config.max_deficit) for i, c in enumerate(counts) if c > 0]
    if workers is None:
        workers = min(len(jobs), 8)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _shard_sums(*job), jobs))
    else:
        results = [_shard_sums(*job) for job in jobs]
    successes = sum(r[0] for r in results)
    sums = tuple(sum(r[1][i] for r in results) for i in range(4))
    return SimOutcome.from_sums(
        successes, config.trials, sums,
        seed=config.seed, shards=shards, max_deficit=config.max_deficit, q=p.q, n=p.n,
    )


def run_shard(config: SimConfig, shard: int, shards: int) -> SimOutcome:
    """Outcome of one shard's share of the trials, as used inside ``run_race_sharded``."""
    if not 0 <= shard < shards:
        raise ConfigError(f"shard {shard} outside 0..{shards - 1}")
    p = config.params
    count = _split(config.trials, shards)[shard]
    if count == 0:
        raise ConfigError(f"shard {shard} has no trials")
    successes, sums = _shard_sums(p.q, p.n, count, config.seed, shard, config.max_deficit)
    return SimOutcome.from_sums(
        successes, count, sums, seed=config.seed, shards=1, max_deficit=config.max_deficit, q=p.q, n=p.n,
    )


def run_race(config: SimConfig) -> SimOutcome:
    """Single-stream simulation; identical to ``run_race_sharded(config, 1)``."""
    return run_race_sharded(config, 1, workers=1)


def merge_outcomes(outcomes) -> SimOutcome:
    """Combine outcomes for the same (q, n); counts and power sums add exactly."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ConfigError("nothing to merge")
    first = outcomes[0]
    if any((o.q, o.n) != (first.q, first.n) for o in outcomes):
        raise ConfigError("cannot merge outcomes for different (q, n)")
    sums = tuple(sum(o.power_sums[i] for o in outcomes) for i in range(4))
    return SimOutcome.from_sums(
        sum(o.successes for o in outcomes), sum(o.trials for o in outcomes), sums,
        seed=first.seed, shards=sum(o.shards for o in outcomes), max_deficit=first.max_deficit,
        q=first.q, n=first.n,
    )
