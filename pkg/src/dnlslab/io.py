"""Atomic file output: JSON, CSV, field snapshots and run manifests."""
import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

OUTPUT_ENV = "DNLSLAB_OUTPUT"


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "dnlslab_runs"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def atomic_write_text(path, text: str) -> Path:
    """Write text via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return atomic_write_text(path, buf.getvalue())


def write_field_csv(path, x, *fields, names=None) -> Path:
    """Columns x, Re f, Im f for each complex field."""
    names = names or [f"f{i}" for i in range(len(fields))]
    header = ["x"]
    for n in names:
        header += [f"Re_{n}", f"Im_{n}"]
    cols = [np.asarray(x, dtype=float)]
    for f in fields:
        f = np.asarray(f, dtype=complex)
        cols += [f.real, f.imag]
    return write_csv(path, header, zip(*cols))


def read_field_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = data[:, 0]
    fields = [data[:, 1 + 2 * i] + 1j * data[:, 2 + 2 * i] for i in range((data.shape[1] - 1) // 2)]
    return x, fields
