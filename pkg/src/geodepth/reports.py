"""CSV/JSON report emission with frozen float formatting and atomic writes."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

SIG_DIGITS = 6


def format_float(value, raw=False) -> str:
    if isinstance(value, bool) or not isinstance(value, float):
        return str(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value) if raw else f"{value:.{SIG_DIGITS}g}"


def _round_tree(obj, raw):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return format_float(obj)
        return obj if raw else float(f"{obj:.{SIG_DIGITS}g}")
    if isinstance(obj, dict):
        return {str(k): _round_tree(v, raw) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v, raw) for v in obj]
    return obj


def csv_text(rows, header, raw=False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(row[k], raw) for k in header])
    return buf.getvalue()


def json_text(obj, raw=False) -> str:
    return json.dumps(_round_tree(obj, raw), indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
