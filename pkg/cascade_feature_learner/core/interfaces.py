from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Callable, Iterator, Sequence, TypeVar

import numpy as np

if TYPE_CHECKING:
    from .dataset import Dataset
    from ..grouping.context import GroupingContext
    from ..grouping.hierarchy import HierarchyTree

T = TypeVar("T")
R = TypeVar("R")


class TaskExecutor(ABC):
    """Abstract base class for running independent units of work."""

    NAME: str

    @abstractmethod
    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        """Apply ``fn`` to every item; results come back in input order."""
        raise NotImplementedError

    @abstractmethod
    def is_deterministic(self) -> bool:
        """True when work runs single-threaded in submission order."""
        raise NotImplementedError


class BatchSource(ABC):
    """Abstract base class for mini-batch composition during training."""

    NAME: str

    @abstractmethod
    def epoch_batches(self, dataset: Dataset, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
        """Yield the row positions of every mini-batch of one epoch."""
        raise NotImplementedError


class GroupingMethod(ABC):
    """Abstract base class for turning classes into a nested group hierarchy."""

    NAME: str

    @abstractmethod
    def is_usable(self, context: GroupingContext) -> bool:
        """Check whether the context carries what this method needs (a model, a file, a validation split)."""
        raise NotImplementedError

    @abstractmethod
    def build(self, context: GroupingContext, group_counts: Sequence[int], seed: int) -> HierarchyTree:
        """Build a hierarchy with ``group_counts[l-1]`` groups at level l.

        Raises:
            ValueError: if the group counts are infeasible or the method's inputs are invalid
        """
        raise NotImplementedError
