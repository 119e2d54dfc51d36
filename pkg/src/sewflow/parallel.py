"""Replication runner: independent jobs, results returned in job order."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def map_reps(fn, count: int, threads: int = 1) -> list:
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(threads, count)) as pool:
        return list(pool.map(fn, range(count)))
