"""Ordered thread map controlled by PSIDO_THREADS; results never depend on it."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PSIDO_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items) -> list:
    """``[fn(i) for i in items]``, possibly threaded, always in input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
