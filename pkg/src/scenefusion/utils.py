"""Small shared helpers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

__all__ = ["parallel_map"]


def parallel_map(fn, items, threads: int = 1) -> list:
    """Ordered map over items, optionally on a thread pool.

    Results are identical for any thread count; callers must pass
    functions whose randomness is pre-seeded per item.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
