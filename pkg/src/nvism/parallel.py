"""Deterministic parallel map over independent solver tasks.

Workers receive a read-only payload through the pool initializer and results
are reassembled in task order, so output arrays are identical for any worker
count.  threads <= 1 runs inline (useful under pytest and for debugging).
"""

from __future__ import annotations

import multiprocessing as mp
import os

__all__ = ["default_threads", "parallel_map"]

_PAYLOAD = None


def default_threads() -> int:
    env = os.environ.get("NVISM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def _init_worker(payload):
    global _PAYLOAD
    _PAYLOAD = payload


def worker_payload():
    return _PAYLOAD


def parallel_map(fn, items, threads: int, payload=None):
    """Map fn over items; fn(item) may read worker_payload().

    Results come back in the order of `items` regardless of scheduling.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        _init_worker(payload)
        try:
            return [fn(item) for item in items]
        finally:
            _init_worker(None)
    ctx = mp.get_context("fork")
    chunk = max(1, len(items) // (threads * 8))
    with ctx.Pool(processes=threads, initializer=_init_worker, initargs=(payload,)) as pool:
        return pool.map(fn, items, chunksize=chunk)
