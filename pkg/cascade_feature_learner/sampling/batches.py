from __future__ import annotations

import math
from typing import Iterator, Optional, Sequence

import numpy as np

from ..core.dataset import BACKGROUND, Dataset
from ..core.interfaces import BatchSource
from .subsets import round_half_up


def uniform_batches(
    dataset: Dataset,
    batch_size: int,
    pos_fraction: float,
    seed: int | np.random.Generator,
    class_ids: Optional[Sequence[int]] = None,
    num_batches: Optional[int] = None,
) -> Iterator[np.ndarray]:
    """Deterministic stream of class-uniform mini-batches (row positions into ``dataset``).

    Every batch holds round(pos_fraction * batch_size) positives. Their classes are balanced within the batch
    (counts differ by at most one, the remainder classes drawn without replacement); the sample inside a class
    is drawn uniformly with replacement. The rest of the batch is background drawn with replacement.
    The stream is infinite unless ``num_batches`` is given.
    """
    if batch_size < 2:
        raise ValueError(f"batch_size must be >= 2, got {batch_size}")
    if not 0.0 < pos_fraction < 1.0:
        raise ValueError(f"pos_fraction must be in (0, 1), got {pos_fraction}")

    classes = list(class_ids) if class_ids is not None else list(dataset.class_ids)
    members = [np.flatnonzero(dataset.labels == class_id) for class_id in classes]
    empty = [class_id for class_id, rows in zip(classes, members) if len(rows) == 0]
    if empty:
        raise ValueError(f"positive class(es) with zero samples: {empty}")
    if not classes:
        raise ValueError("uniform batches need at least one positive class")
    background = np.flatnonzero(dataset.labels == BACKGROUND)

    n_pos = round_half_up(pos_fraction * batch_size)
    n_neg = batch_size - n_pos
    if n_neg > 0 and len(background) == 0:
        raise ValueError("uniform batches need background samples to fill the batch")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    full_rounds, remainder = divmod(n_pos, len(classes))
    produced = 0
    while num_batches is None or produced < num_batches:
        chosen = np.repeat(np.arange(len(classes)), full_rounds)
        if remainder:
            chosen = np.concatenate([chosen, rng.choice(len(classes), size=remainder, replace=False)])
        positives = np.array(
            [members[k][rng.integers(len(members[k]))] for k in chosen],
            dtype=np.int64,
        )
        negatives = background[rng.integers(len(background), size=n_neg)] if n_neg else np.empty(0, np.int64)
        yield np.concatenate([positives, negatives])
        produced += 1


class ShuffledBatchSource(BatchSource):
    """Plain epochs: a fresh permutation of all rows cut into consecutive batches."""

    NAME = "plain"

    def epoch_batches(self, dataset: Dataset, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
        order = rng.permutation(len(dataset))
        for start in range(0, len(order), batch_size):
            yield order[start : start + batch_size]


class UniformBatchSource(BatchSource):
    """Class-uniform batches; an epoch is as many batches as a plain epoch would have."""

    NAME = "uniform"

    def __init__(self, pos_fraction: float = 0.25, class_ids: Optional[Sequence[int]] = None):
        self.pos_fraction = pos_fraction
        self.class_ids = class_ids

    def epoch_batches(self, dataset: Dataset, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
        class_ids = self.class_ids
        if class_ids is None:
            present = np.unique(dataset.labels[dataset.positive_mask])
            class_ids = [int(class_id) for class_id in present]
        return uniform_batches(
            dataset,
            batch_size,
            self.pos_fraction,
            rng,
            class_ids=class_ids,
            num_batches=math.ceil(len(dataset) / batch_size),
        )


def create_batch_source(name: str, pos_fraction: float = 0.25) -> BatchSource:
    if name == ShuffledBatchSource.NAME:
        return ShuffledBatchSource()
    if name == UniformBatchSource.NAME:
        return UniformBatchSource(pos_fraction=pos_fraction)
    raise ValueError(f"Unknown batch source: {name}. Available: plain, uniform")
