# -*- coding: utf-8 -*-
"""
线程池扇出 (indexed fan-out)

Jobs are submitted per chunk and merged back by chunk index, so the result
order never depends on completion order or on BOUNDARY_ATLAS_THREADS.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Sequence, TypeVar

from services.atlas.app.core.config import settings

T = TypeVar("T")
R = TypeVar("R")


def fan_out(
    job: Callable[[T], R], items: Sequence[T], workers: int | None = None
) -> list[R]:
    workers = max(1, min(workers or settings.THREADS, len(items)))
    if workers == 1:
        return [job(it) for it in items]

    size = -(-len(items) // workers)
    chunks = [items[i : i + size] for i in range(0, len(items), size)]
    results: list[list[R] | None] = [None] * len(chunks)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        fut2idx = {
            ex.submit(lambda ch: [job(it) for it in ch], ch): ci
            for ci, ch in enumerate(chunks)
        }
        for fut in as_completed(fut2idx):
            results[fut2idx[fut]] = fut.result()
    return [r for part in results for r in part]
