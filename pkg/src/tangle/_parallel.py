from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: int | None) -> int:
    """``TANGLE_WORKERS`` overrides the requested worker count."""
    env = os.environ.get("TANGLE_WORKERS")
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ValueError(f"TANGLE_WORKERS must be an integer, got {env!r}") from None
    if workers is None:
        return 1
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Ordered map; results come back in input order for any worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))
