"""Command-line interface: ``doublespend {prob,duration,table,confirmations,simulate,compare}``.

Exit status is 0 on success, 2 on usage errors and 3 on domain errors
(for example q >= 1/2).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from fractions import Fraction

from . import asymptotics, attack, recurrence, simulate
from .numeric import DomainError
from .output import Method, OutputRecord, method_label, render

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3

EXACT_LIMIT = 2000
MIN_ASYMPTOTIC_N = 10


class UsageError(Exception):
    pass


def parse_q(text: str, mode: str | None):
    """Parse q as given on the command line.

    A fraction string ("a/b") always means exact mode. A decimal selects
    float mode unless ``--mode exact`` is passed, in which case the decimal
    is read exactly (0.1 -> 1/10).
    """
    text = text.strip()
    try:
        exact = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse q={text!r}; use a decimal or a fraction a/b")
    if "/" in text:
        if mode == "float":
            raise UsageError("a fraction q implies exact mode; pass a decimal for float mode")
        mode = "exact"
    elif mode is None:
        mode = "float"
    return (exact if mode == "exact" else float(exact)), mode


def _zero(mode):
    return Fraction(0) if mode == "exact" else 0.0


def _record(method, q_text, n, values, mode, **meta) -> OutputRecord:
    return OutputRecord(method, q_text, n, values, {"mode": mode, **meta})


def _emit(records, fmt):
    sys.stdout.write(render([r.row() for r in records], fmt))


def _emit_text(pairs):
    for k, v in pairs:
        if isinstance(v, float):
            v = repr(v)
        sys.stdout.write(f"{k} {v}\n" if k else f"{v}\n")


# ---------------------------------------------------------------------------

def prob_value(q, n: int, method: str, order: int, mode: str) -> tuple:
    """Return (label, value, metadata) for ``prob``."""
    if method == "exact":
        return Method.EXACT_SUM.value, attack.rosenfeld_exact(q, n), {}
    if method == "recurrence":
        if n <= 1:
            value = recurrence.rosenfeld_table(q, 1)[n]
            return Method.RECURRENCE.value, value, {}
        table = recurrence.rosenfeld_table(q, n)
        meta = {}
        if mode == "float":
            meta["drift_flagged"] = table.first_drift is not None and table.first_drift <= n
        return Method.RECURRENCE.value, table[n], meta
    if method == "beta":
        return Method.BETA.value, attack.rosenfeld_beta(q, n), {}
    if method == "asymptotic":
        label = method_label(Method.ASYMPTOTIC, order)
        if n < MIN_ASYMPTOTIC_N:
            warnings.warn(f"no asymptotic evaluation below n={MIN_ASYMPTOTIC_N}; reporting the exact value")
            return label, attack.rosenfeld_exact(q, n), {"fallback": Method.EXACT_SUM.value}
        return label, asymptotics.rosenfeld_asymptotic(q, n, order).value, {}
    raise UsageError(f"unknown method {method!r}")


def cmd_prob(args) -> int:
    q, mode = parse_q(args.q, args.mode)
    method = args.method or ("exact" if args.n <= EXACT_LIMIT else "recurrence")
    label, value, meta = prob_value(q, args.n, method, args.order, mode)
    if args.format == "text":
        _emit_text([(None, value)])
    else:
        _emit([_record(label, args.q, args.n, {"value": value}, mode, **meta)], args.format)
    return EXIT_OK


def cmd_duration(args) -> int:
    q, mode = parse_q(args.q, args.mode)
    stats = attack.duration_stats(q, args.n)
    values = {
        "expectation": stats.expectation,
        "second_moment": stats.second_moment,
        "variance": stats.variance,
        "std_dev": stats.std_dev,
    }
    if args.format == "text":
        _emit_text(values.items())
    else:
        _emit([_record(Method.EXACT_SUM.value, args.q, args.n, values, mode)], args.format)
    return EXIT_OK


def table_rows(q, mode: str, max_n: int | None, risk):
    """Yield (n, R_n, E_n, Var_n) until max_n or until R_n <= risk."""
    attack.ModelParams(q, 0)
    n = 0
    if q == 0:
        while True:
            r = _zero(mode) + (1 if n == 0 else 0)
            dur = _zero(mode) if n == 0 else None
            yield n, r, dur, dur
            if (max_n is not None and n >= max_n) or (risk is not None and r <= risk):
                return
            n += 1
    if mode == "exact":
        rs = recurrence.iter_rosenfeld(q)
        As = recurrence.iter_duration_numerator(q)
    while True:
        if mode == "exact":
            r = next(rs)
            if n == 0:
                e = var = _zero(mode)
            else:
                a = next(As)
                e = a / r
                var = attack.second_moment_numerator(q, n) / r - e * e
        else:
            r = attack.rosenfeld_exact(q, n)
            stats = attack.duration_stats(q, n)
            e, var = stats.expectation, stats.variance
        yield n, r, e, var
        if (max_n is not None and n >= max_n) or (risk is not None and r <= risk):
            return
        n += 1


def cmd_table(args) -> int:
    if args.max_n is None and args.risk is None:
        raise UsageError("table needs --max-n and/or --risk")
    if args.max_n is not None and args.max_n < 1:
        raise UsageError("--max-n must be at least 1")
    q, mode = parse_q(args.q, args.mode)
    if args.mode is None and mode == "exact" and (args.max_n is None or args.max_n > EXACT_LIMIT):
        raise UsageError(f"exact tables are the default only up to n={EXACT_LIMIT}; pass --mode exact to confirm, or give q as a decimal for float mode")
    risk = None
    if args.risk is not None:
        risk = Fraction(args.risk) if mode == "exact" else float(Fraction(args.risk))
        if not 0 < risk < 1:
            raise DomainError("--risk must lie in (0, 1)")
    records = []
    for n, r, e, var in table_rows(q, mode, args.max_n, risk):
        values = {"rosenfeld": r, "expectation": e, "variance": var}
        records.append(_record("TABLE", args.q, n, values, mode))
    _emit(records, args.format)
    return EXIT_OK


def cmd_confirmations(args) -> int:
    q, mode = parse_q(args.q, args.mode)
    risk = Fraction(args.risk) if mode == "exact" else float(Fraction(args.risk))
    n = attack.min_confirmations(q, risk)
    achieved = attack.rosenfeld_exact(q, n)
    if args.format == "text":
        _emit_text([("confirmations", n), ("rosenfeld", achieved)])
    else:
        rec = _record("CONFIRMATIONS", args.q, n, {"confirmations": n, "rosenfeld": achieved}, mode, risk=args.risk)
        _emit([rec], args.format)
    return EXIT_OK


def cmd_simulate(args) -> int:
    q, _ = parse_q(args.q, "float")
    config = simulate.SimConfig(attack.ModelParams(q, args.n), args.trials, args.seed, args.max_deficit)
    outcome = simulate.run_race_sharded(config, args.shards)
    d = outcome.to_dict()
    values = {k: d[k] for k in (
        "successes", "trials", "success_rate", "rate_std_err", "duration_mean", "duration_mean_std_err",
        "duration_second_moment", "duration_variance", "duration_variance_std_err",
    )}
    ci = d["confidence_intervals_95"]
    for k, (lo, hi) in ci.items():
        values[f"{k}_ci95_low"] = lo
        values[f"{k}_ci95_high"] = hi
    rec = _record(
        Method.SIMULATION.value, args.q, args.n, values, "float",
        seed=args.seed, shards=args.shards, max_deficit=outcome.max_deficit,
    )
    _emit([rec], args.format)
    return EXIT_OK


def _rel_dev(value, reference):
    if value is None or reference == 0:
        return None
    if isinstance(value, Fraction) and isinstance(reference, Fraction):
        return (value - reference) / reference
    return (float(value) - float(reference)) / float(reference)


def compare_records(q, q_text, mode, n_list, orders, trials, seed, shards):
    records = []
    max_n = max(n_list)
    table = recurrence.rosenfeld_table(q, max(max_n, 1)) if q != 0 else None
    for n in n_list:
        exact = attack.rosenfeld_exact(q, n)
        rows = [(Method.EXACT_SUM.value, exact, {})]
        if table is not None:
            meta = {}
            if mode == "float":
                meta["drift_flagged"] = table.first_drift is not None and table.first_drift <= n
            rows.append((Method.RECURRENCE.value, table[n], meta))
        if n >= 1 and q != 0:
            rows.append((Method.BETA.value, attack.rosenfeld_beta(q, n), {}))
            for k in orders:
                label, value, meta = prob_value(q, n, "asymptotic", k, mode)
                rows.append((label, value, meta))
        if trials:
            config = simulate.SimConfig(attack.ModelParams(float(q), n), trials, seed)
            out = simulate.run_race_sharded(config, shards)
            rows.append((Method.SIMULATION.value, out.success_rate,
                         {"std_err": out.rate_std_err, "trials": trials, "seed": seed, "shards": shards}))
        for label, value, meta in rows:
            vals = {"value": value, "rel_dev": _rel_dev(value, exact)}
            records.append(_record(label, q_text, n, vals, mode, **meta))
    return records


def cmd_compare(args) -> int:
    if not args.n:
        raise UsageError("compare needs at least one n")
    if any(n < 0 for n in args.n):
        raise DomainError("n must be non-negative")
    if any(not 0 <= k <= asymptotics.MAX_ORDER for k in args.orders):
        raise UsageError(f"orders must lie in 0..{asymptotics.MAX_ORDER}")
    q, mode = parse_q(args.q, args.mode)
    records = compare_records(q, args.q, mode, args.n, args.orders, args.trials, args.seed, args.shards)
    _emit(records, args.format)
    return EXIT_OK


# ---------------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    items = [t for t in text.replace(",", " ").split() if t]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    try:
        return [int(t) for t in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doublespend",
        description="Double-spend race probabilities, durations, expansions and simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("text", "json", "csv"), default="text"):
        p.add_argument("--q", required=True, help="attacker share, decimal (0.1) or fraction (1/10)")
        p.add_argument("--mode", choices=("exact", "float"), default=None,
                       help="arithmetic mode; default exact for fraction input, float for decimals")
        p.add_argument("--format", choices=formats, default=default)

    p = sub.add_parser("prob", help="success probability R_n(q)")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("exact", "recurrence", "beta", "asymptotic"), default=None)
    p.add_argument("--order", type=int, default=asymptotics.MAX_ORDER, choices=range(asymptotics.MAX_ORDER + 1))
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("duration", help="conditional phase-two duration statistics")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_duration)

    p = sub.add_parser("table", help="rows of n, R_n, E_n, Var_n")
    common(p, formats=("csv", "json"), default="csv")
    p.add_argument("--max-n", type=int, default=None)
    p.add_argument("--risk", default=None, help="stop at the first n with R_n <= risk")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("confirmations", help="smallest n with R_n(q) <= risk")
    common(p)
    p.add_argument("--risk", required=True)
    p.set_defaults(func=cmd_confirmations)

    p = sub.add_parser("simulate", help="Monte Carlo race simulation")
    p.add_argument("--q", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--max-deficit", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="side-by-side comparison of all methods")
    common(p, formats=("csv", "json"), default="csv")
    p.add_argument("--n", type=_int_list, required=True, help="comma-separated list, e.g. 10,50,100")
    p.add_argument("--orders", type=_int_list, default=[0, asymptotics.MAX_ORDER])
    p.add_argument("--trials", type=int, default=0, help="simulation trials per n (0 skips simulation)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            status = args.func(args)
        except UsageError as exc:
            parser.print_usage(sys.stderr)
            print(f"{parser.prog}: error: {exc}", file=sys.stderr)
            status = EXIT_USAGE
        except simulate.ConfigError as exc:
            print(f"{parser.prog}: error: {exc}", file=sys.stderr)
            status = EXIT_USAGE
        except DomainError as exc:
            print(f"{parser.prog}: domain error: {exc}", file=sys.stderr)
            status = EXIT_DOMAIN
    for w in caught:
        print(f"{parser.prog}: warning: {w.message}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
