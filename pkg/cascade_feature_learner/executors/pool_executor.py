import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence, TypeVar

from ..core.interfaces import TaskExecutor

T = TypeVar("T")
R = TypeVar("R")


class PoolExecutor(TaskExecutor):
    """Runs work items on a thread pool.

    numpy releases the GIL inside its linear algebra kernels, so same-level nodes and scoring chunks overlap.
    Results are returned in submission order; the first exception raised by a task is re-raised.
    """

    NAME = "pool"

    def __init__(self, max_workers: Optional[int] = None, debug: bool = False):
        if max_workers is not None and max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers or min(8, os.cpu_count() or 1)
        self.debug = debug

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        """Apply ``fn`` to every item concurrently, preserving input order in the result."""
        if self.debug:
            start_time = time.perf_counter()
            print(f"Running {len(items)} task(s) on {self.max_workers} worker(s)")
        else:
            start_time = None

        if len(items) <= 1:
            results = [fn(item) for item in items]
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                results = list(pool.map(fn, items))

        if self.debug and start_time is not None:
            elapsed_time = time.perf_counter() - start_time
            print(f"Pooled tasks completed in {elapsed_time:.3f}s")
        return results

    def is_deterministic(self) -> bool:
        return False
