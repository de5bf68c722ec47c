"""Deterministic CSV/JSON writers.

Floats are always printed with 17 significant digits so identical inputs give
identical bytes and every value round-trips exactly.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    text = format(x, ".17g")
    # keep floats recognizable as floats
    return text if any(c in text for c in ".en") else text + ".0"


def _json(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json(v, indent, level + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        return "[\n" + ",\n".join(pad + _json(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and 17-digit floats (non-finite as null)."""
    return _json(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else v if isinstance(v, str) else fmt(v) for v in row])
    return path


def write_dict_rows(path, rows, header=None) -> Path:
    rows = list(rows)
    if header is None:
        header = list(rows[0].keys()) if rows else []
    return write_csv(path, header, ([r.get(h) for h in header] for r in rows))


def write_series(directory, times, series: dict) -> list:
    """One ``(t, value)`` CSV per named diagnostic."""
    directory = Path(directory)
    out = []
    for name in sorted(series):
        vals = np.asarray(series[name], dtype=float)
        out.append(write_csv(directory / f"{name}.csv", ["t", name], zip(times, vals)))
    return out


def write_field(path, field) -> Path:
    return write_csv(path, ["x", "value"], zip(field.grid.nodes, field.values))


def spectrum_dict(field) -> dict:
    """``{"N", "coeffs": [[re, im], ...]}`` ordered n = 0, 1, ..., N/2, -N/2+1, ..., -1."""
    c = field.full_spectrum()
    return {"N": field.N, "coeffs": [[z.real, z.imag] for z in c]}
