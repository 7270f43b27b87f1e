"""Replication-parallel execution with worker-count-independent results.

Replications ``0..n_reps-1`` are cut into blocks whose size is fixed by the
caller (never by the worker count). Each block is a pure function of its index
range, and block outputs are concatenated in replication order, so the result
array is bit-identical for any number of workers.
"""

from __future__ import annotations

import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable

import numpy as np

from .errors import ConfigurationError


def block_ranges(n_reps: int, block_size: int) -> list[tuple[int, int]]:
    if n_reps < 1:
        raise ConfigurationError(f"n_reps must be >= 1, got {n_reps}")
    if block_size < 1:
        raise ConfigurationError(f"block_size must be >= 1, got {block_size}")
    return [(k0, min(k0 + block_size, n_reps)) for k0 in range(0, n_reps, block_size)]


def _call(fn, args, kwargs, rng_range):
    return fn(rng_range[0], rng_range[1], *args, **kwargs)


def run_blocks(
    fn: Callable[..., np.ndarray],
    n_reps: int,
    block_size: int,
    workers: int = 1,
    *args,
    **kwargs,
) -> np.ndarray:
    """Evaluate ``fn(k0, k1, *args, **kwargs)`` over all blocks, in order.

    ``fn`` must be a module-level function returning an array whose first axis
    indexes the replications ``k0..k1-1``.
    """
    blocks = block_ranges(n_reps, block_size)
    task = partial(_call, fn, args, kwargs)
    workers = max(1, int(workers))
    if workers == 1 or len(blocks) == 1:
        parts = [task(b) for b in blocks]
    else:
        chunk = max(1, len(blocks) // (workers * 8))
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            parts = list(pool.map(task, blocks, chunksize=chunk))
    return np.concatenate(parts, axis=0)


def exact_mean(values) -> float:
    """Correctly rounded mean; independent of summation order."""
    values = np.asarray(values, dtype=float).ravel()
    return math.fsum(values.tolist()) / values.size


def exact_sum(values) -> float:
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())
