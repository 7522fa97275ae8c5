"""Deterministic parallel helpers.

Random streams come from numpy's Philox counter-based generator; one child
``SeedSequence`` per worker makes results reproducible for a fixed
``(seed, workers)`` pair. Work is merged in submission order.
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np


def worker_generators(seed, workers):
    children = np.random.SeedSequence(seed).spawn(max(1, int(workers)))
    return [np.random.Generator(np.random.Philox(s)) for s in children]


def split_counts(total, workers):
    workers = max(1, int(workers))
    base, extra = divmod(int(total), workers)
    return [base + (i < extra) for i in range(workers)]


def parallel_map(fn, items, workers=1, chunksize=1):
    """``list(map(fn, items))``, spread over processes when ``workers > 1``."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
