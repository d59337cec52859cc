"""Ordered process-pool map with a worker count from ``FRAC_NLS_WORKERS``."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

ENV_WORKERS = "FRAC_NLS_WORKERS"


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(ENV_WORKERS)
    if raw is None or raw.strip() == "":
        return max(1, int(default))
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_WORKERS} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{ENV_WORKERS} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, tasks, workers: int = 1):
    """``[fn(t) for t in tasks]``, evaluated on ``workers`` processes; order is preserved."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
