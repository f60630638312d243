"""Report documents (JSON), grid exports (CSV) and schema validation."""
from __future__ import annotations

import csv
import io
import json
from datetime import datetime, timezone
from functools import lru_cache
from importlib import resources
from typing import Optional

import jsonschema

from .calculus import DerivativeFunction, DerivKind, NABLA
from .errors import ConfigError, MathError
from .rules import DEFAULT_DENSE_SAMPLES, RuleReport
from .yfunction import FunctionPair, derivative_ratio, quotient_function, y_function

SCHEMA_VERSION = 1
CSV_COLUMNS = ("t", "phi", "psi", "ratio", "Y", "verdict-local-sign")


@lru_cache(maxsize=1)
def load_schema() -> dict:
    text = resources.files("tscale").joinpath("schema/report.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_document(doc: dict) -> None:
    """Raise :class:`ConfigError` describing the first schema violation."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"report does not match schema at {where}: {e.message}")


def build_document(command: str, config: dict, report: Optional[RuleReport] = None,
                   fuzz: Optional[dict] = None, timestamp: bool = True) -> dict:
    doc = {"tool": "tscale", "schema_version": SCHEMA_VERSION, "command": command}
    if timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    doc["config"] = config
    doc["report"] = None if report is None else report.to_dict()
    doc["fuzz"] = fuzz
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# -- CSV -------------------------------------------------------------------------------

def _cell(fn):
    try:
        return fn()
    except (MathError, ZeroDivisionError):
        return None


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def grid_rows(pair: FunctionPair, a=None, b=None, alpha=None,
              dense_samples: int = DEFAULT_DENSE_SAMPLES) -> list[dict]:
    """One row per grid point of ``[a, b]``; undefined quantities are left empty.

    ``ratio`` and ``Y`` use the nabla derivative, or the diamond-alpha one
    when ``alpha`` is given; ``verdict-local-sign`` is the sign of the same
    derivative of ``phi/psi`` at the point.
    """
    ts = pair.scale
    a = ts.min if a is None else ts.point(a)
    b = ts.max if b is None else ts.point(b)
    sub = ts.restrict(a, b)
    pair = FunctionPair(pair.phi, pair.psi, sub)
    k = NABLA if alpha is None else DerivKind.diamond(alpha)
    ratio = derivative_ratio(pair, k)
    y = y_function(pair, k)
    dq = DerivativeFunction(quotient_function(pair), sub, k)
    rows = []
    for p in sub.grid(dense_samples=dense_samples):
        d = _cell(lambda: dq.value(p))
        sign = "" if d is None else "+" if d > 0 else "-" if d < 0 else "0"
        rows.append({
            "t": p.value,
            "phi": _cell(lambda: pair.phi.value(p)),
            "psi": _cell(lambda: pair.psi.value(p)),
            "ratio": _cell(lambda: ratio.value(p)),
            "Y": _cell(lambda: y.value(p)),
            "verdict-local-sign": sign,
        })
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([repr(float(r["t"]))] + [_fmt(r[c]) for c in CSV_COLUMNS[1:5]]
                   + [r["verdict-local-sign"]])
    return buf.getvalue()


__all__ = [
    "SCHEMA_VERSION", "CSV_COLUMNS", "load_schema", "validate_document", "build_document",
    "dumps", "grid_rows", "rows_to_csv",
]
