import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_MIN_CHUNK = 2048


def thread_count():
    """Worker cap from ``ELLIPSUM_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("ELLIPSUM_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def map_rows(fn, rows):
    """Apply a vectorized ``fn`` to row chunks of ``rows`` and concatenate.

    Order of the output matches ``rows`` regardless of scheduling.
    """
    workers = min(thread_count(), max(1, len(rows) // _MIN_CHUNK))
    if workers <= 1:
        return fn(rows)
    chunks = np.array_split(rows, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=0)
