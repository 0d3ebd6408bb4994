"""Fixed-order chunked evaluation so results do not depend on the thread count."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")

DEFAULT_CHUNK = 64


def chunk_ranges(total: int, chunk: int = DEFAULT_CHUNK) -> list[range]:
    return [range(start, min(start + chunk, total)) for start in range(0, total, chunk)]


def map_chunks(func: Callable[[range], T], total: int, threads: int = 1,
               chunk: int = DEFAULT_CHUNK) -> list[T]:
    """Apply ``func`` to consecutive index ranges; the returned list is always in chunk order."""
    ranges = chunk_ranges(total, chunk)
    if threads <= 1 or len(ranges) <= 1:
        return [func(r) for r in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, ranges))


def ordered_sum(parts: Sequence):
    """Left fold in list order."""
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total
