"""Atomic file output and the CSV/JSON result schemas."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from ..spectrum import w_to_dbm

EVOLUTION_HEADER = ["channel_index", "frequency_THz", "z_km", "power_dBm"]


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(x: float) -> str:
    return repr(float(x))


def evolution_csv(frequency_hz, z_m, powers_w, order: int | None = None) -> str:
    """Rows ordered by channel, then z. An ``order`` column is appended if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVOLUTION_HEADER + (["order"] if order is not None else []))
    p_dbm = w_to_dbm(powers_w)
    z_km = np.asarray(z_m) / 1e3
    for ch, f in enumerate(frequency_hz):
        f_thz = _fmt(f / 1e12)
        for iz, z in enumerate(z_km):
            row = [ch, f_thz, _fmt(z), _fmt(p_dbm[ch, iz])]
            if order is not None:
                row.append(order)
            w.writerow(row)
    return buf.getvalue()


def error_csv(frequency_hz, errors_by_order: dict[int, np.ndarray]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["channel_index", "frequency_THz", "order", "error_dB"])
    for k in sorted(errors_by_order):
        for ch, (f, e) in enumerate(zip(frequency_hz, errors_by_order[k])):
            w.writerow([ch, _fmt(f / 1e12), k, _fmt(e)])
    return buf.getvalue()


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (_fmt(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _finite(obj):
    # JSON has no infinities; dark channels (-inf dBm) become null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def json_text(doc) -> str:
    return json.dumps(_finite(json.loads(json.dumps(doc, default=_json_default))), indent=2) + "\n"
