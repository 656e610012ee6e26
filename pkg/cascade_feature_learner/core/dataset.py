from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

FORMAT_TAG = "LTFV1"
SPLITS = ("pretrain", "train", "val", "test")
BACKGROUND = 0


class DatasetFormatError(ValueError):
    """Raised when a text artifact does not conform to its format; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"{message}, line {line}" if line is not None else message)


@dataclass(frozen=True)
class Sample:
    """One labeled feature vector."""

    id: str
    split: str
    label: int
    features: np.ndarray


class Dataset:
    """Immutable collection of labeled feature vectors with split tags.

    Stored column-wise: ids, split tags, labels and an (n, dim) feature matrix.
    Background is label 0; positive classes are 1..num_classes.
    """

    def __init__(
        self,
        ids: Sequence[str],
        splits: Sequence[str],
        labels: Sequence[int] | np.ndarray,
        features: np.ndarray,
        num_classes: int,
    ):
        features = np.array(features, dtype=np.float64, copy=True)
        if features.ndim != 2:
            raise ValueError(f"Feature matrix must be 2-dimensional, got shape {features.shape}")
        n = features.shape[0]
        if not len(ids) == len(splits) == len(labels) == n:
            raise ValueError("ids, splits, labels and features must have the same length")
        if num_classes < 0:
            raise ValueError(f"num_classes must be non-negative, got {num_classes}")

        self.ids: tuple[str, ...] = tuple(ids)
        self.splits = np.array(splits, dtype=object)
        self.labels = np.array(labels, dtype=np.int64)
        self.features = features
        self.num_classes = num_classes
        self.dim = features.shape[1]

        unknown = sorted(set(self.splits.tolist()) - set(SPLITS))
        if unknown:
            raise ValueError(f"Unknown split tags: {', '.join(unknown)}. Available: {', '.join(SPLITS)}")
        if n and (self.labels.min() < 0 or self.labels.max() > num_classes):
            raise ValueError(f"label out of range [0, {num_classes}]")
        if len(set(self.ids)) != n:
            raise ValueError("duplicate sample id")

        for array in (self.splits, self.labels, self.features):
            array.setflags(write=False)
        self._index = {sample_id: position for position, sample_id in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __repr__(self) -> str:
        return f"Dataset(n={len(self)}, dim={self.dim}, num_classes={self.num_classes})"

    @property
    def samples(self) -> Iterator[Sample]:
        for position, sample_id in enumerate(self.ids):
            yield Sample(
                id=sample_id,
                split=str(self.splits[position]),
                label=int(self.labels[position]),
                features=self.features[position],
            )

    @property
    def positive_mask(self) -> np.ndarray:
        return self.labels > BACKGROUND

    @property
    def class_ids(self) -> tuple[int, ...]:
        """Positive class IDs 1..C."""
        return tuple(range(1, self.num_classes + 1))

    def index_of(self, sample_id: str) -> int:
        return self._index[sample_id]

    def subset(self, indices: Sequence[int] | np.ndarray) -> Dataset:
        """Dataset restricted to the given positions, kept in the given order."""
        positions = np.asarray(indices, dtype=np.int64)
        return Dataset(
            [self.ids[i] for i in positions],
            self.splits[positions],
            self.labels[positions],
            self.features[positions],
            self.num_classes,
        )

    def split(self, *names: str) -> Dataset:
        """Samples tagged with any of the given splits, in file order."""
        for name in names:
            if name not in SPLITS:
                raise ValueError(f"Unknown split: {name}. Available: {', '.join(SPLITS)}")
        return self.subset(np.flatnonzero(np.isin(self.splits, list(names))))

    def select_labels(self, labels: Sequence[int], include_background: bool = False) -> Dataset:
        wanted = list(labels) + ([BACKGROUND] if include_background else [])
        return self.subset(np.flatnonzero(np.isin(self.labels, wanted)))

    def class_counts(self) -> dict[int, int]:
        """Sample count for every positive class, zero-count classes included."""
        counts = np.bincount(self.labels, minlength=self.num_classes + 1)
        return {class_id: int(counts[class_id]) for class_id in self.class_ids}


@dataclass(frozen=True)
class LongTailProfile:
    per_class_count: dict[int, int]
    sorted_counts: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sorted_counts", tuple(sorted(self.per_class_count.values(), reverse=True)))

    @property
    def total_positives(self) -> int:
        return sum(self.sorted_counts)

    def head_mass(self, k: int) -> float:
        """Fraction of positives held by the k most populous classes."""
        total = self.total_positives
        if total == 0:
            return 0.0
        return sum(self.sorted_counts[: max(k, 0)]) / total

    def classes_for_mass(self, fraction: float) -> int:
        """Smallest number of largest classes that together hold at least ``fraction`` of positives."""
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {fraction}")
        total = self.total_positives
        running = 0
        for k, count in enumerate(self.sorted_counts, start=1):
            running += count
            if running >= fraction * total:
                return k
        return len(self.sorted_counts)


def profile(dataset: Dataset) -> LongTailProfile:
    """Per-class positive counts of a dataset."""
    return LongTailProfile(per_class_count=dataset.class_counts())


def load_dataset(path: str) -> Dataset:
    """Read an LTFV1 file.

    Line 1 is ``LTFV1 <num_samples> <dim> <num_classes>``; every further non-empty line is
    ``<id> <split> <label> <f1> ... <fd>``.
    """
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()

    if not lines:
        raise DatasetFormatError("malformed header: empty file", 1)
    header = lines[0].split()
    if len(header) != 4 or header[0] != FORMAT_TAG:
        raise DatasetFormatError(f"malformed header, expected '{FORMAT_TAG} <num_samples> <dim> <num_classes>'", 1)
    try:
        num_samples, dim, num_classes = (int(token) for token in header[1:])
    except ValueError as exc:
        raise DatasetFormatError("malformed header: counts must be integers", 1) from exc
    if num_samples < 0 or dim < 1 or num_classes < 0:
        raise DatasetFormatError("malformed header: counts out of range", 1)

    ids: list[str] = []
    splits: list[str] = []
    labels: list[int] = []
    features = np.empty((num_samples, dim), dtype=np.float64)
    seen: set[str] = set()

    for line_number, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            continue
        if len(ids) == num_samples:
            raise DatasetFormatError(f"more rows than the {num_samples} declared in the header", line_number)
        if len(tokens) < 3:
            raise DatasetFormatError("row must start with '<id> <split> <label>'", line_number)
        sample_id, split, label_token = tokens[:3]
        if len(tokens) - 3 != dim:
            raise DatasetFormatError("dimension mismatch", line_number)
        if sample_id in seen:
            raise DatasetFormatError(f"duplicate id '{sample_id}'", line_number)
        if split not in SPLITS:
            raise DatasetFormatError(f"unknown split '{split}'", line_number)
        try:
            label = int(label_token)
        except ValueError as exc:
            raise DatasetFormatError(f"label '{label_token}' is not an integer", line_number) from exc
        if not 0 <= label <= num_classes:
            raise DatasetFormatError("label out of range", line_number)
        try:
            features[len(ids)] = [float(token) for token in tokens[3:]]
        except ValueError as exc:
            raise DatasetFormatError("non-numeric feature value", line_number) from exc

        seen.add(sample_id)
        ids.append(sample_id)
        splits.append(split)
        labels.append(label)

    if len(ids) != num_samples:
        raise DatasetFormatError(f"header declares {num_samples} samples but file has {len(ids)}", len(lines))

    return Dataset(ids, splits, labels, features, num_classes)


def format_float(value: float) -> str:
    """Shortest text that parses back to the same double."""
    return repr(float(value))


def save_dataset(dataset: Dataset, path: str) -> None:
    lines = [f"{FORMAT_TAG} {len(dataset)} {dataset.dim} {dataset.num_classes}"]
    for position, sample_id in enumerate(dataset.ids):
        values = " ".join(format_float(value) for value in dataset.features[position])
        lines.append(f"{sample_id} {dataset.splits[position]} {int(dataset.labels[position])} {values}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
