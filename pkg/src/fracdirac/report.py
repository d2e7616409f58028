"""Deterministic JSON / CSV writers.

Floats are written with 17 significant digits, keys are sorted and
non-finite floats become ``null`` so repeated runs give identical bytes.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .conformable import GridFn

__all__ = ["dumps", "write_json", "write_csv", "write_gridfn_csv"]


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    text = "%.17g" % v
    # keep floats recognisable as floats
    if all(c not in text for c in ".eEn"):
        text += ".0"
    return text


def _encode(obj, indent: int, level: int) -> str:
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
        return _quote(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(items) + "]"
        return "[\n" + ",\n".join(pad + i for i in items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = sorted(obj, key=_sort_key)
        items = [f"{pad}{_quote(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in keys]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def _sort_key(k):
    # numeric keys (eigenvalue indices) in numeric order, before text keys
    s = str(k)
    return (0, int(s), "") if s.lstrip("-").isdigit() else (1, 0, s)


def _quote(s: str) -> str:
    import json

    return json.dumps(s, ensure_ascii=False)


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    """Write rows (sequences of numbers/strings) under a header line."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append("nan" if not math.isfinite(v) else "%.17g" % v)
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_gridfn_csv(path, fn: GridFn) -> Path:
    g = fn.grid
    return write_csv(path, ("x", "s", "value"),
                     zip(g.x.tolist(), g.s.tolist(), fn.values.tolist()))
