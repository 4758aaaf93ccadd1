"""Deterministic worker-pool map.

Tasks are dispatched to a process pool and collected strictly by task index,
so results are bit-identical for any worker count (including 1, which runs
inline without a pool).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    return os.cpu_count() or 1


def parallel_map(fn, items, workers: int = 1, chunksize: int = 1) -> list:
    """Ordered map of ``fn`` over ``items`` with ``workers`` processes."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
