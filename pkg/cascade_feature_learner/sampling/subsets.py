"""Subset schemes for long-tailed training data.

rand_pos and rand_all keep the class distribution (and so the long tail); pseudo_uniform caps every class at
``n_max`` positives and flattens it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from ..core.dataset import BACKGROUND, Dataset, DatasetFormatError

SCHEMES = ("rand_pos", "rand_all", "pseudo_uniform", "class_subset")


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class SampleSubset:
    """Id-subset of a base dataset produced by one sampling scheme."""

    base: Dataset
    indices: np.ndarray
    scheme: str
    params: dict[str, Any]
    seed: int
    kept_ids: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        positions = np.unique(np.asarray(self.indices, dtype=np.int64))
        positions.setflags(write=False)
        object.__setattr__(self, "indices", positions)
        object.__setattr__(self, "kept_ids", frozenset(self.base.ids[i] for i in positions))

    @property
    def realized_ratio(self) -> float:
        """Kept positives divided by base positives."""
        total = int(self.base.positive_mask.sum())
        if total == 0:
            return 1.0
        return int(self.base.positive_mask[self.indices].sum()) / total

    def to_dataset(self) -> Dataset:
        """Kept samples in base order."""
        return self.base.subset(self.indices)


def _check_ratio(r: float) -> None:
    if not 0.0 < r <= 1.0:
        raise ValueError(f"ratio r must be in (0, 1], got {r}")


def _draw(rng: np.random.Generator, positions: np.ndarray, count: int) -> np.ndarray:
    if count >= len(positions):
        return positions
    return rng.choice(positions, size=count, replace=False)


def rand_pos(dataset: Dataset, r: float, seed: int) -> SampleSubset:
    """Keep round(r * N+) positives drawn uniformly over all positives; keep every negative."""
    _check_ratio(r)
    positives = np.flatnonzero(dataset.positive_mask)
    if len(positives) == 0:
        raise ValueError("rand_pos needs at least one positive sample")
    rng = np.random.default_rng(seed)
    kept = _draw(rng, positives, round_half_up(r * len(positives)))
    negatives = np.flatnonzero(~dataset.positive_mask)
    return SampleSubset(dataset, np.concatenate([kept, negatives]), "rand_pos", {"r": r}, seed)


def rand_all(dataset: Dataset, r: float, seed: int) -> SampleSubset:
    """Subsample positives and negatives independently at ratio r."""
    _check_ratio(r)
    rng = np.random.default_rng(seed)
    positives = np.flatnonzero(dataset.positive_mask)
    negatives = np.flatnonzero(~dataset.positive_mask)
    kept_positives = _draw(rng, positives, round_half_up(r * len(positives)))
    kept_negatives = _draw(rng, negatives, round_half_up(r * len(negatives)))
    return SampleSubset(dataset, np.concatenate([kept_positives, kept_negatives]), "rand_all", {"r": r}, seed)


def pseudo_uniform(dataset: Dataset, n_max: int, seed: int) -> SampleSubset:
    """Cap every class at ``n_max`` positives; classes under the cap and all negatives are untouched."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    rng = np.random.default_rng(seed)
    kept = [np.flatnonzero(dataset.labels == BACKGROUND)]
    for class_id in dataset.class_ids:
        kept.append(_draw(rng, np.flatnonzero(dataset.labels == class_id), n_max))
    subset = SampleSubset(dataset, np.concatenate(kept), "pseudo_uniform", {"n_max": n_max}, seed)
    subset.params["r"] = subset.realized_ratio
    return subset


def class_subset(dataset: Dataset, classes: Sequence[int]) -> SampleSubset:
    """Positives of the named classes plus every negative."""
    unknown = sorted(set(classes) - set(dataset.class_ids))
    if unknown:
        raise ValueError(f"Unknown class ids: {unknown}")
    positions = np.flatnonzero(np.isin(dataset.labels, list(classes) + [BACKGROUND]))
    return SampleSubset(dataset, positions, "class_subset", {"classes": sorted(classes)}, 0)


def capped_total(per_class_counts: Sequence[int], n_max: int) -> int:
    return int(sum(min(count, n_max) for count in per_class_counts))


def nmax_for_ratio(per_class_counts: Mapping[int, int] | Sequence[int], r: float) -> int:
    """Smallest cap whose capped positive total over N+ reaches ``r``."""
    counts = list(per_class_counts.values()) if isinstance(per_class_counts, Mapping) else list(per_class_counts)
    counts = [int(count) for count in counts if count > 0]
    _check_ratio(r)
    if not counts:
        raise ValueError("nmax_for_ratio needs at least one non-empty class")
    total = sum(counts)
    minimum = len(counts) / total
    if r < minimum - 1e-12:
        raise ValueError(f"ratio {r} is below the achievable minimum {minimum:.6f} (every class capped at 1)")

    target = r * total - 1e-9
    low, high = 1, max(counts)
    while low < high:
        middle = (low + high) // 2
        if capped_total(counts, middle) >= target:
            high = middle
        else:
            low = middle + 1
    return low


def save_kept_ids(subset: SampleSubset, path: str) -> None:
    """One kept id per line, in base dataset order."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("".join(f"{subset.base.ids[i]}\n" for i in subset.indices))


def load_kept_ids(dataset: Dataset, path: str, scheme: str = "file") -> SampleSubset:
    positions = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            sample_id = raw_line.strip()
            if not sample_id:
                continue
            try:
                positions.append(dataset.index_of(sample_id))
            except KeyError as exc:
                raise DatasetFormatError(f"id '{sample_id}' is not in the dataset", line_number) from exc
    return SampleSubset(dataset, np.array(positions, dtype=np.int64), scheme, {}, 0)
