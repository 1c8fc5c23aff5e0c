"""CSV/JSON serialisation of quote tables."""

from __future__ import annotations

import csv
import json
from typing import IO, Iterable

from .pricer import Quote, SurfaceRow

SCHEMA_LINE = "# volquote-schema 1"
QUOTE_COLUMNS = ("y0", "T", "gamma", "pi", "davis", "h_claim", "h_merton", "excess_dollars",
                 "lambda1", "lambda2", "bond", "residual_mass")


def quote_record(y0: float, T: float, gamma: float, q: Quote) -> dict[str, float]:
    return {
        "y0": float(y0), "T": float(T), "gamma": float(gamma),
        "pi": q.pi, "davis": q.davis, "h_claim": q.h_claim, "h_merton": q.h_merton,
        "excess_dollars": q.excess_dollars, "lambda1": q.lambda1, "lambda2": q.lambda2,
        "bond": q.bond, "residual_mass": float(q.diagnostics.get("residual_mass", 0.0)),
    }


def surface_records(rows: Iterable[SurfaceRow]) -> list[dict[str, float]]:
    return [quote_record(r.y0, r.T, r.gamma, r.quote) for r in rows]


def write_csv(records: list[dict], fh: IO[str], columns=None, comment: str | None = None) -> None:
    """Versioned CSV; floats written with ``repr`` so values round-trip exactly."""
    columns = list(columns or (records[0].keys() if records else QUOTE_COLUMNS))
    fh.write(SCHEMA_LINE + "\n")
    if comment:
        fh.write(f"# {comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        w.writerow([repr(rec[c]) if isinstance(rec[c], float) else rec[c] for c in columns])


def write_json(obj, fh: IO[str]) -> None:
    json.dump(obj, fh, indent=2, sort_keys=False)
    fh.write("\n")


def read_csv(fh: IO[str]) -> list[dict[str, float]]:
    """Inverse of :func:`write_csv` for numeric tables."""
    first = fh.readline().strip()
    if first != SCHEMA_LINE:
        raise ValueError(f"unsupported table header {first!r}")
    lines = [ln for ln in fh if not ln.startswith("#")]
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(lines)]
