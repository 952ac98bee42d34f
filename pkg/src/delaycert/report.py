"""Byte-stable report files.

Reports are flat ``key -> value`` maps. Nested dicts are flattened with dotted
keys, absent or NaN values become the token ``undefined`` and floats use the
shortest round-trip representation, so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path

import numpy as np

__all__ = ["UNDEFINED", "flatten", "normalize", "to_structured", "to_text", "emit_report", "load_csv"]

UNDEFINED = "undefined"


def _scalar(v):
    if isinstance(v, Enum):
        v = v.value
    if isinstance(v, np.generic):
        v = v.item()
    if v is None:
        return UNDEFINED
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        if math.isnan(v):
            return UNDEFINED
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return str(v)


def normalize(v):
    """JSON-ready copy with the undefined/inf tokens substituted."""
    if isinstance(v, dict):
        return {str(k): normalize(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [normalize(x) for x in (v.tolist() if isinstance(v, np.ndarray) else v)]
    return _scalar(v)


def flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def to_structured(d: dict) -> str:
    return json.dumps(normalize(flatten(d)), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(v) -> str:
    v = normalize(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_text(d: dict, title: str = "") -> str:
    flat = flatten(d)
    width = max((len(k) for k in flat), default=0)
    lines = [title, "=" * len(title)] if title else []
    lines += [f"{k.ljust(width)} = {_fmt(flat[k])}" for k in sorted(flat)]
    return "\n".join(lines) + "\n"


def emit_report(results: dict, out_dir, title: str = "") -> tuple[Path, Path]:
    """Write ``report.txt`` and ``report.structured`` (JSON) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    txt = out / "report.txt"
    js = out / "report.structured"
    txt.write_text(to_text(results, title))
    js.write_text(to_structured(results))
    return txt, js


def load_csv(path):
    """Header names and the float table written by the ``to_csv`` exporters."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data
