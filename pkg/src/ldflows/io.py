"""CSV/JSON serialization of curves, paths and reports."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .curves import BVCurve, Jump, SampledCurve

__all__ = ["curve_to_csv", "curve_from_csv", "rows_to_csv", "dumps_json", "read_curve"]


def _num(v) -> str:
    return repr(float(v))


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def curve_to_csv(curve) -> str:
    """``t,x`` rows; BV curves add ``x_left,x_right,jump`` columns."""
    if isinstance(curve, BVCurve):
        left, right = curve.left_limits, curve.right_limits
        rows = []
        for k in range(curve.t.size):
            j = curve.jump_at(k)
            rows.append([curve.t[k], curve.x[k], left[k], right[k], 1 if j is not None else 0])
        return rows_to_csv(["t", "x", "x_left", "x_right", "jump"], rows)
    return rows_to_csv(["t", "x"], zip(curve.t, curve.x))


def curve_from_csv(text: str):
    """Inverse of :func:`curve_to_csv`."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    data = np.array([[float(v) for v in row] for row in reader if row])
    if header[:2] != ["t", "x"]:
        raise ValueError("curve CSV must start with columns t,x")
    t, x = data[:, 0], data[:, 1]
    if "jump" in header:
        jl = data[:, header.index("x_left")]
        jr = data[:, header.index("x_right")]
        flag = data[:, header.index("jump")]
        jumps = [Jump(t[k], jl[k], x[k], jr[k]) for k in np.flatnonzero(flag > 0)]
        return BVCurve(t, x, jumps)
    return SampledCurve(t, x)


def read_curve(path):
    return curve_from_csv(Path(path).read_text())


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def dumps_json(obj) -> str:
    """Deterministic JSON (sorted keys, non-finite floats as strings)."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"
