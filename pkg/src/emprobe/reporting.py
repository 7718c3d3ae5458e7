"""Deterministic report serialization.

report.json is the authoritative output; the CSVs are flat projections of
numbers that already appear in it. Serialization is byte-stable: keys are
sorted, floats are rendered with 17 significant digits (enough to
round-trip IEEE doubles), and no environment-dependent fields are written.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from emprobe.errors import ValidationError


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValidationError(f"non-finite value {x} cannot be serialized")
    return f"{x:.17g}"


def canonical_json(obj: Any) -> str:
    """Compact JSON with sorted keys and fixed float formatting."""
    parts: list[str] = []
    _emit(obj, parts)
    return "".join(parts)


def _emit(obj: Any, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif isinstance(obj, bool):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(format_float(float(obj)))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, Mapping):
        parts.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise ValidationError(f"JSON keys must be strings, got {key!r}")
            if i:
                parts.append(",")
            parts.append(json.dumps(key))
            parts.append(":")
            _emit(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        parts.append("[")
        for i, item in enumerate(seq):
            if i:
                parts.append(",")
            _emit(item, parts)
        parts.append("]")
    else:
        raise ValidationError(f"cannot serialize {type(obj).__name__}")


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_bytes((canonical_json(obj) + "\n").encode("utf-8"))


def write_csv(path: str | Path, header: Sequence[str],
              rows: Sequence[Sequence[Any]]) -> None:
    """CSV with the same float rendering as the JSON report."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(format_float(float(cell)))
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                text = str(cell)
                if "," in text or '"' in text or "\n" in text:
                    text = '"' + text.replace('"', '""') + '"'
                cells.append(text)
        lines.append(",".join(cells))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
