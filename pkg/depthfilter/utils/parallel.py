# depthfilter/utils/parallel.py
# Ordered map over a bounded thread pool. numpy/scipy release the GIL in the
# heavy kernels, so threads are enough for column, pair and replicate tasks.

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def pmap(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """[fn(x) for x in items], results in input order whatever the schedule."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))
