"""Serialize run reports as JSON or flat CSV.

Floats are written with 17 significant digits so that every value
round-trips exactly. CSV output has one ``key,value`` row per leaf, with
dotted keys (list positions become indices), carrying the same content as
the JSON form.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np


def _number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _scalar(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _number(float(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(obj, indent: int = 2) -> str:
    def emit(o, level: int) -> str:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {emit(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple)) for v in o):
                return "[" + ", ".join(_scalar(v) for v in o) + "]"
            return "[\n" + ",\n".join(pad + emit(v, level + 1) for v in o) + "\n" + end + "]"
        return _scalar(o)

    return emit(obj, 0) + "\n"


def flatten(obj, prefix: str = "") -> list[tuple[str, object]]:
    rows: list[tuple[str, object]] = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            rows.extend(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            rows.append((prefix, "[]"))
        for i, v in enumerate(obj):
            rows.extend(flatten(v, f"{prefix}.{i}" if prefix else str(i)))
    else:
        rows.append((prefix, obj))
    return rows


def to_csv(obj) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in flatten(obj):
        writer.writerow([key, value if isinstance(value, str) else _scalar(value)])
    return buf.getvalue()


def parse_csv(text: str) -> dict:
    """Inverse of :func:`to_csv` up to list/dict shape: dotted key -> decoded value."""
    out = {}
    for row in list(csv.reader(io.StringIO(text)))[1:]:
        key, cell = row
        try:
            out[key] = json.loads(cell)
        except json.JSONDecodeError:
            out[key] = cell
    return out
