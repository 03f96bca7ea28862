"""Small helpers for JSON output: extended reals and atomic writes."""

from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path


def encode_float(x):
    """Finite floats pass through (shortest round-trip repr); +-inf become strings."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def decode_float(x) -> float:
    if isinstance(x, str):
        return float(x)
    return float(x)


def sig12(x: float) -> float:
    """Round to 12 significant digits (polygon coordinates)."""
    return float(f"{float(x):.12g}")


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
