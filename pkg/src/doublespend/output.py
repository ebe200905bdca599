"""Output records and their CSV / JSON serialization.

Exact values are written as reduced fraction strings ("7/125"), floats with
``repr`` (the shortest string that round-trips, at most 17 significant
digits). Undefined quantities are ``null`` in JSON and ``undefined`` in CSV.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

UNDEFINED = "undefined"


class Method(enum.Enum):
    EXACT_SUM = "EXACT_SUM"
    RECURRENCE = "RECURRENCE"
    BETA = "BETA"
    ASYMPTOTIC = "ASYMPTOTIC"
    SIMULATION = "SIMULATION"


def method_label(method: Method, order: int | None = None) -> str:
    if method is Method.ASYMPTOTIC:
        return f"ASYMPTOTIC({order})"
    return method.value


def format_number(x):
    """JSON-ready form of a number: Fraction -> "a/b", float stays float."""
    if x is None or isinstance(x, str):
        return x
    if isinstance(x, bool):
        return x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return x
    x = float(x)
    return None if math.isnan(x) else x


@dataclass
class OutputRecord:
    method: str
    q: str
    n: int | None
    values: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = {"method": self.method, "q": self.q, "n": self.n}
        for k, v in self.values.items():
            out[k] = format_number(v)
        for k, v in self.metadata.items():
            out[k] = format_number(v)
        return out


def _csv_cell(v) -> str:
    if v is None:
        return UNDEFINED
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows: list[dict]) -> str:
    header: list[str] = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_csv_cell(r.get(k)) if k in r else "" for k in header])
    return buf.getvalue()


def from_csv(text: str) -> list[dict]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return [dict(zip(header, row)) for row in reader]


def to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2, allow_nan=False) + "\n"


def from_json(text: str) -> list[dict]:
    return json.loads(text)


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "csv":
        return to_csv(rows)
    if fmt == "json":
        return to_json(rows)
    raise ValueError(f"unknown format {fmt!r}")


def parse(text: str, fmt: str) -> list[dict]:
    if fmt == "csv":
        return from_csv(text)
    if fmt == "json":
        return from_json(text)
    raise ValueError(f"unknown format {fmt!r}")
