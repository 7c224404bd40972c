"""File formats: curve JSON, CSV tables, deterministic float output."""
import csv
import io
import json
import math
import os
import tempfile

import numpy as np

from .errors import AncientFlowError
from .geometry import ClosedCurve

__all__ = [
    "fmt",
    "dumps",
    "atomic_write",
    "curve_to_dict",
    "write_curve",
    "read_curve",
    "parse_curve",
    "write_csv",
]


def fmt(value):
    """Format a float with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    return "%.17g" % value


def dumps(obj, indent=None):
    """JSON encoding with sorted keys and 17-digit floats.

    ``json.dumps`` uses shortest-repr floats, so numbers are rendered here
    to keep every output byte-stable across platforms.
    """
    return _encode(obj, indent, 0)


def _encode(obj, indent, level):
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer, float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # Point rows stay on one line.
        inner = None if indent is None or all(not isinstance(v, (list, tuple, dict)) for v in obj) else indent
        if inner is None:
            return "[" + ", ".join(_encode(v, None, 0) for v in obj) + "]"
        return "[" + sep.join(f"{pad}{_encode(v, indent, level + 1)}" for v in obj) + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def curve_to_dict(curve):
    return {
        "param_period": curve.param_period,
        "points": curve.points,
        "metadata": curve.metadata,
    }


def write_curve(path, curve):
    atomic_write(path, dumps(curve_to_dict(curve), indent=1) + "\n")


def parse_curve(text, source="<string>"):
    """Parse and validate curve JSON, reporting the offending line or field."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AncientFlowError("bad-curve-file", f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise AncientFlowError("bad-curve-file", f"{source}: top level must be an object")
    unknown = set(data) - {"param_period", "points", "metadata"}
    if unknown:
        raise AncientFlowError("bad-curve-file", f"{source}: unknown field(s) {sorted(unknown)}")
    if "points" not in data:
        raise AncientFlowError("bad-curve-file", f"{source}: missing field 'points'")
    points = data["points"]
    if not isinstance(points, list) or not points:
        raise AncientFlowError("bad-curve-file", f"{source}: field 'points' must be a non-empty list")
    width = None
    for i, row in enumerate(points):
        if not isinstance(row, list):
            raise AncientFlowError("bad-curve-file", f"{source}: points[{i}] is not a list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise AncientFlowError("bad-curve-file", f"{source}: points[{i}] has {len(row)} coordinates, expected {width}")
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise AncientFlowError("bad-curve-file", f"{source}: points[{i}][{j}] is not a finite number")
    period = data.get("param_period", 2.0 * math.pi)
    if isinstance(period, bool) or not isinstance(period, (int, float)) or not period > 0:
        raise AncientFlowError("bad-curve-file", f"{source}: field 'param_period' must be a positive number")
    metadata = data.get("metadata", {})
    if not isinstance(metadata, dict):
        raise AncientFlowError("bad-curve-file", f"{source}: field 'metadata' must be an object")
    try:
        return ClosedCurve(np.array(points, dtype=float), period, metadata)
    except AncientFlowError as exc:
        raise AncientFlowError("bad-curve-file", f"{source}: field 'points': {exc}") from exc


def read_curve(path):
    with open(path) as fh:
        return parse_curve(fh.read(), os.fspath(path))


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, int, np.floating, np.integer)) else v for v in row])
    atomic_write(path, buf.getvalue())
