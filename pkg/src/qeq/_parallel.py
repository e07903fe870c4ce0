"""Partitioned evaluation with order-independent reductions.

Every reduction goes through :func:`math.fsum`, which is correctly rounded,
so the result never depends on how the work was partitioned.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def pmap(fn, items, threads: int = 1) -> list:
    """``[fn(i) for i in items]``, split into ``threads`` contiguous partitions."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    size = -(-len(items) // threads)
    chunks = [items[i : i + size] for i in range(0, len(items), size)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(lambda ch: [fn(i) for i in ch], chunks))
    return [r for part in parts for r in part]


def rsum(values) -> float:
    return math.fsum(np.asarray(values, dtype=np.float64).ravel())


def csum(values) -> complex:
    arr = np.asarray(values, dtype=np.complex128).ravel()
    return complex(math.fsum(arr.real), math.fsum(arr.imag))
