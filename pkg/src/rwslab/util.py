"""Small shared helpers: CSV/JSON output and deterministic parallel mapping."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import InvalidParameterError

THREADS_ENV = "RWS_LAB_THREADS"


def fmt_float(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def write_csv(path, columns, digits: int = 15, comment: str | None = None) -> None:
    """Write named columns of equal length; floats at ``digits`` significant digits."""
    names = [name for name, _ in columns]
    arrays = [np.asarray(arr) for _, arr in columns]
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays):
        raise InvalidParameterError("csv columns must have equal length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        fh.write(",".join(names) + "\n")
        for i in range(n):
            cells = []
            for a in arrays:
                v = a[i]
                if isinstance(v, (np.floating, float)):
                    cells.append(fmt_float(float(v), digits))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


def canonical_json(obj) -> str:
    """Stable JSON rendering: sorted keys, no whitespace variation."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if n < 1:
        raise InvalidParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items):
    """Map fn over items, collecting results in input order.

    Work units must be independent; with the thread-count variable unset or 1
    this is a plain loop, so results never depend on scheduling.
    """
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
