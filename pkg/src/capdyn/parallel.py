"""Order-preserving process pool used by the sweeps.

Results are placed by task index, never by completion order, so the output
of a sweep is identical for any worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional

THREADS_ENV = "CAPDYN_THREADS"


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return value
    return os.cpu_count() or 1


def _call(packed):
    fn, args = packed
    return fn(*args)


def map_ordered(fn: Callable, arg_tuples: Iterable[tuple], workers: Optional[int] = None) -> list:
    """``[fn(*args) for args in arg_tuples]``, optionally across processes."""
    tasks = list(arg_tuples)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*args) for args in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_call, [(fn, args) for args in tasks]))
