"""CSV / JSON rendering of result rows.

Rows are flat dicts. Exact rationals print as ``p/q`` (or an integer),
other floats with 12 significant digits, missing values as empty cells
(``null`` in JSON).
"""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from importlib import resources
from typing import Sequence

CURVE_COLUMNS = ("tool_version", "command", "K", "alpha", "regime", "d_theory")

SWEEP_COLUMNS = (
    "tool_version", "command", "alpha", "regime", "K", "Q", "M", "trials",
    "d_theory", "d_empirical", "gap", "max_level_error", "seed", "zero_noise", "error",
)

SIMULATE_COLUMNS = (
    "tool_version", "command", "K", "Q", "M", "alpha", "regime", "trials", "seed",
    "zero_noise", "record", "index", "value", "ci_low", "ci_high", "rate_formula",
    "rate_measured", "d_theory", "d_empirical", "d_measured", "out_of_alphabet",
)

VERIFY_COLUMNS = (
    "tool_version", "command", "K", "Q", "M", "alpha", "regime", "test_alphabet",
    "cap", "tuples", "failures", "result", "trace",
)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _json_value(v):
    if v is None or isinstance(v, (bool, int, str)):
        return v
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else _cell(v)
    if isinstance(v, float):
        return float(format(v, ".12g"))
    return str(v)


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)  # RFC 4180 quoting, CRLF line ends
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def to_json(rows: Sequence[dict], columns: Sequence[str]) -> str:
    data = [{c: _json_value(row.get(c)) for c in columns} for row in rows]
    return json.dumps(data, indent=1, ensure_ascii=False) + "\n"


def render(rows: Sequence[dict], columns: Sequence[str], fmt: str) -> str:
    if fmt == "csv":
        return to_csv(rows, columns)
    if fmt == "json":
        return to_json(rows, columns)
    raise ValueError(f"unknown format {fmt!r}")


def load_schema() -> dict:
    return json.loads(resources.files("gdof").joinpath("data/results.schema.json").read_text())
