"""Order-preserving map over a process pool."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_jobs(jobs=None) -> int:
    """``jobs`` if given, else ``$GEODEPTH_JOBS``, else the CPU count."""
    if jobs is None:
        env = os.environ.get("GEODEPTH_JOBS")
        if env:
            jobs = int(env)
        else:
            jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    return jobs


def parallel_map(fn, items, jobs=1):
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
