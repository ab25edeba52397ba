"""Seeded ensemble execution with results independent of the worker count.

Replicas are grouped into fixed-size blocks. Each block is a pure function
of its replica indices, blocks may run on any number of threads, and the
results are concatenated in block order. The compiled kernels and numpy's
FFT release the GIL, so threads give real parallelism without pickling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .fbm import replica_seed

BLOCK = 256


def default_jobs() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def block_ranges(replicas: int, block: int = BLOCK):
    return [(lo, min(lo + block, replicas)) for lo in range(0, replicas, block)]


def run_blocks(work, replicas: int, master_seed: int, jobs: int | None = None, block: int = BLOCK):
    """Apply ``work(seeds, first_index)`` to every block and stack the results.

    ``work`` receives the per-replica seeds of the block and must return an
    array whose first axis has one entry per replica.
    """
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    ranges = block_ranges(int(replicas), block)

    def task(rng):
        lo, hi = rng
        seeds = [replica_seed(master_seed, r) for r in range(lo, hi)]
        return np.asarray(work(seeds, lo))

    if jobs == 1 or len(ranges) == 1:
        parts = [task(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(task, ranges))
    return np.concatenate(parts, axis=0) if parts else np.empty((0,))
