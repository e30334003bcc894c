"""
Reading and writing tables as JSON or CSV.

JSON layout::

    {"shape": [2, 2], "order": "lex-msb", "mode": "counts", "p": [274, 278, 200, 3951]}

Entries may be numbers or ``"num/den"`` strings; a table with any
``"num/den"`` entry is read back as an exact :class:`RationalTable`.  CSV has one row
per cell, ``a1,...,ad,value``, with an optional header row.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .tables import ProbTable, RationalTable, TableFormatError, TableShape, cell_rank

log = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-6


def _number(v):
    if isinstance(v, bool):
        raise TableFormatError(f"non-numeric cell {v!r}")
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, str):
        v = v.strip()
        try:
            if "/" in v:
                return Fraction(v)
            return int(v)
        except (ValueError, ZeroDivisionError):
            pass
        try:
            return float(v)
        except ValueError:
            pass
    raise TableFormatError(f"non-numeric cell {v!r}")


def _infer_mode(values: Sequence) -> str:
    integral = all(float(v).is_integer() for v in values)
    return "counts" if integral and sum(values) > 1 + SUM_TOLERANCE else "probability"


def _build(shape: TableShape, values: list, mode: str | None) -> ProbTable | RationalTable:
    if len(values) != shape.total_cells:
        raise TableFormatError(f"shape {shape} needs {shape.total_cells} cells, got {len(values)}")
    if any(v < 0 for v in values):
        raise TableFormatError("table entries must be nonnegative")
    mode = mode or _infer_mode(values)
    if mode not in ("probability", "counts"):
        raise TableFormatError(f"unknown mode {mode!r}")
    total = sum(values)
    if total <= 0:
        raise TableFormatError("table has zero total")
    if mode == "probability" and total != 1:
        if abs(float(total) - 1) > SUM_TOLERANCE:
            raise TableFormatError(f"probabilities sum to {float(total)!r}, not 1")
        log.warning("probabilities sum to %r; renormalizing", float(total))
    exact = any(isinstance(v, Fraction) for v in values)
    if exact:
        return RationalTable(shape, tuple(Fraction(v) / Fraction(total) for v in values))
    table = ProbTable(shape, np.array(values, dtype=float), mode)
    return table.normalized() if mode == "counts" or total != 1 else table


def table_from_dict(data: dict, shape: TableShape | None = None) -> ProbTable | RationalTable:
    """Build a table from the JSON layout; counts are normalized on the way in."""
    if not isinstance(data, dict) or "p" not in data:
        raise TableFormatError("table JSON needs a 'p' entry")
    order = data.get("order", "lex-msb")
    if order != "lex-msb":
        raise TableFormatError(f"unsupported cell order {order!r}")
    values = [_number(v) for v in data["p"]]
    if shape is None:
        if "shape" not in data:
            raise TableFormatError("table JSON needs a 'shape' entry")
        try:
            shape = TableShape(data["shape"])
        except (TypeError, ValueError) as exc:
            raise TableFormatError(f"bad shape: {exc}") from exc
    return _build(shape, values, data.get("mode"))


def table_from_csv(text: str, shape: TableShape | None = None) -> ProbTable | RationalTable:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [int(c) for c in rows[0][:-1]]
        except ValueError:
            rows = rows[1:]  # header
    if not rows:
        raise TableFormatError("empty CSV table")
    width = len(rows[0])
    if width < 2 or any(len(r) != width for r in rows):
        raise TableFormatError("every CSV row needs the same number of index columns plus a value")
    try:
        idx = [tuple(int(c) for c in r[:-1]) for r in rows]
    except ValueError as exc:
        raise TableFormatError(f"non-integer cell index: {exc}") from exc
    vals = [_number(r[-1]) for r in rows]
    if shape is None:
        shape = TableShape([max(a[k] for a in idx) + 1 for k in range(width - 1)])
    if shape.d != width - 1:
        raise TableFormatError(f"CSV rows have {width - 1} indices, shape has d={shape.d}")
    values: list = [None] * shape.total_cells
    for a, v in zip(idx, vals):
        try:
            k = cell_rank(a, shape) - 1
        except ValueError as exc:
            raise TableFormatError(str(exc)) from exc
        if values[k] is not None:
            raise TableFormatError(f"cell {a} listed twice")
        values[k] = v
    if any(v is None for v in values):
        raise TableFormatError("CSV does not list every cell")
    return _build(shape, values, None)


def read_table(path, shape: TableShape | None = None) -> ProbTable | RationalTable:
    """Read a table file; the format follows the suffix (``.csv`` or JSON otherwise)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TableFormatError(f"cannot read {path}: {exc.strerror}") from exc
    if path.suffix.lower() == ".csv":
        return table_from_csv(text, shape)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableFormatError(f"{path}: invalid JSON ({exc.msg})") from exc
    return table_from_dict(data, shape)


def table_to_dict(table: ProbTable | RationalTable) -> dict:
    """JSON layout of a table; floats keep full precision, rationals become strings."""
    if isinstance(table, RationalTable):
        p = [str(v) for v in table.p]
        mode = "probability"
    else:
        p = [float(v) for v in table.p]
        mode = table.mode
    return {"shape": list(table.shape.levels), "order": "lex-msb", "mode": mode, "p": p}


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators."""
    return json.dumps(obj, sort_keys=True, indent=2)
