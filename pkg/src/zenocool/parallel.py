"""Order-preserving worker pool for parameter sweeps."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional

THREADS_ENV = "ZENOCOOL_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def ordered_map(fn: Callable, items: Iterable, threads: Optional[int] = 1) -> List:
    """``[fn(x) for x in items]``, evaluated on ``threads`` workers.

    Every item is computed independently, so results do not depend on the
    number of workers; output order follows input order.
    """
    items = list(items)
    n = default_threads() if threads is None else max(1, int(threads))
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
