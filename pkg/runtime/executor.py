"""Ordered parallel map over independent work items."""

import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, List, Literal, Optional, TypeVar

from config import get_settings

logger = logging.getLogger("runtime.executor")

T = TypeVar("T")
R = TypeVar("R")


def worker_cap(max_workers: Optional[int] = None) -> int:
    """Workers to use: the explicit cap, else ``QKDLAB_THREADS``, else the CPU count."""
    if max_workers is not None:
        return max(1, max_workers)
    configured = get_settings().threads
    if configured is not None:
        return configured
    return os.cpu_count() or 1


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    kind: Literal["process", "thread"] = "process",
    max_workers: Optional[int] = None,
) -> List[R]:
    """
    Apply ``fn`` to every item and return the results in input order.

    Runs sequentially in the calling thread when the worker cap is 1 or there
    is at most one item. Process pools need ``fn`` and the items to pickle.

    Args:
        fn: Work function
        items: Work items
        kind: ``process`` for CPU-bound pure-Python work, ``thread`` for numpy kernels
        max_workers: Explicit cap overriding the settings

    Returns:
        One result per item, in order
    """
    work = list(items)
    workers = min(worker_cap(max_workers), len(work))
    if workers <= 1:
        return [fn(item) for item in work]

    pool: Executor = ProcessPoolExecutor(max_workers=workers) if kind == "process" else ThreadPoolExecutor(max_workers=workers)
    logger.debug(f"Mapping {len(work)} items over {workers} {kind} workers")
    with pool:
        return list(pool.map(fn, work))
