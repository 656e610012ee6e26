import time
from typing import Callable, Sequence, TypeVar

from ..core.interfaces import TaskExecutor

T = TypeVar("T")
R = TypeVar("R")


class SerialExecutor(TaskExecutor):
    """Runs work items one after another in the calling thread."""

    NAME = "serial"

    def __init__(self, debug: bool = False):
        self.debug = debug

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        """Apply ``fn`` to every item in submission order."""
        if self.debug:
            start_time = time.perf_counter()
            print(f"Running {len(items)} task(s) serially")
        else:
            start_time = None

        results = [fn(item) for item in items]

        if self.debug and start_time is not None:
            elapsed_time = time.perf_counter() - start_time
            print(f"Serial tasks completed in {elapsed_time:.3f}s")
        return results

    def is_deterministic(self) -> bool:
        return True
