"""Fixed-order parallel helpers.

Work is always split into the same chunks regardless of the worker count and
partial results are combined by a fixed pairwise tree, so outputs are
bit-identical for any number of threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")

CHUNK = 32


def chunks(n: int, size: int = CHUNK) -> list[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def tree_sum(parts: Sequence[T]) -> T:
    """Pairwise reduction: ((p0 + p1) + (p2 + p3)) + ..."""
    if not parts:
        raise ValueError("nothing to sum")
    level = list(parts)
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def pmap(fn: Callable[[slice], T], pieces: Sequence[slice], workers: int = 1) -> list[T]:
    if workers <= 1 or len(pieces) <= 1:
        return [fn(p) for p in pieces]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, pieces))
