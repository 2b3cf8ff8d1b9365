"""Split trial-index ranges across worker processes.

Every trial is a pure function of its index, so the merged output does not
depend on the number of workers or on how the range was chunked.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np


def chunk_ranges(start: int, stop: int, n_chunks: int) -> list[tuple[int, int]]:
    n_chunks = max(1, min(n_chunks, stop - start)) if stop > start else 1
    edges = np.linspace(start, stop, n_chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def map_trials(func: Callable, args: tuple, start: int, stop: int, workers: int = 1) -> list:
    """Concatenate ``func(*args, lo, hi)`` over contiguous chunks of ``[start, stop)``.

    ``func`` must return a list and be importable (module level) when
    ``workers > 1``.
    """
    if workers <= 1 or stop - start < 2:
        return func(*args, start, stop)
    chunks = chunk_ranges(start, stop, workers * 4)
    out: list = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, *args, lo, hi) for lo, hi in chunks]
        for f in futures:
            out.extend(f.result())
    return out


def concat(parts: Sequence[list]) -> list:
    out: list = []
    for p in parts:
        out.extend(p)
    return out
