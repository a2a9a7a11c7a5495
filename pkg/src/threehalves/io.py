"""CSV ingestion and deterministic JSON output."""
from __future__ import annotations

import csv
import datetime as dt
import math
from pathlib import Path

import numpy as np

from .calibration import PriceSeries
from .exceptions import DataError

__all__ = ["DAYS_PER_YEAR", "read_price_csv", "write_price_csv", "dumps", "year_fractions"]

DAYS_PER_YEAR = 365.25


def year_fractions(dates) -> np.ndarray:
    """ACT/365.25 year fractions from the first date."""
    d0 = dates[0]
    return np.array([(d - d0).days / DAYS_PER_YEAR for d in dates])


def read_price_csv(path) -> PriceSeries:
    """Read a ``date,close`` CSV with ISO-8601 dates.

    Lines starting with ``#`` are skipped.  Errors name the offending line.

    Raises
    ------
    DataError
        On a missing or wrong header, unparsable fields, non-positive
        closes or dates that do not strictly increase.
    FileNotFoundError
        If ``path`` does not exist.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        lines = [(i, ln) for i, ln in enumerate(fh, start=1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DataError(f"{path}: empty file")
    rows = list(csv.reader([ln for _, ln in lines]))
    header = [h.strip().lower() for h in rows[0]]
    if header != ["date", "close"]:
        raise DataError(f"{path}:{lines[0][0]}: expected header 'date,close', got {','.join(rows[0])!r}")
    dates, closes = [], []
    for (lineno, _), row in zip(lines[1:], rows[1:]):
        if len(row) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
        try:
            d = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad ISO-8601 date {row[0]!r}") from None
        try:
            c = float(row[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: bad close {row[1]!r}") from None
        if not (math.isfinite(c) and c > 0):
            raise DataError(f"{path}:{lineno}: close must be positive, got {row[1].strip()!r}")
        if dates and d <= dates[-1]:
            raise DataError(f"{path}:{lineno}: date {d.isoformat()} does not increase")
        dates.append(d)
        closes.append(c)
    if len(dates) < 2:
        raise DataError(f"{path}: need at least two data rows")
    return PriceSeries(year_fractions(dates), np.array(closes), tuple(d.isoformat() for d in dates))


def write_price_csv(fh, dates, closes) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["date", "close"])
    for d, c in zip(dates, closes):
        w.writerow([d.isoformat() if hasattr(d, "isoformat") else d, format(float(c), ".17g")])


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if all(ch not in s for ch in ".eEn"):
        s += ".0"
    return s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj.tolist() if isinstance(obj, np.ndarray) else obj)
        if not seq:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float printed to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"
