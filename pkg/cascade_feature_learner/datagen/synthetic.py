from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ..core.config import GenConfig
from ..core.dataset import BACKGROUND, SPLITS, Dataset, DatasetFormatError


def largest_remainder(weights: Sequence[float] | np.ndarray, total: int) -> np.ndarray:
    """Integer apportionment of ``total`` proportional to ``weights``.

    Leftover units go to the largest fractional parts, ties to the lower index.
    """
    weights = np.asarray(weights, dtype=np.float64)
    quotas = weights / weights.sum() * total
    counts = np.floor(quotas).astype(np.int64)
    leftover = int(total - counts.sum())
    if leftover > 0:
        order = np.lexsort((np.arange(len(quotas)), -(quotas - counts)))
        counts[order[:leftover]] += 1
    return counts


def zipf_counts(num_classes: int, s: float, n_total: int) -> list[int]:
    """Per-class counts proportional to k^(-s) summing exactly to ``n_total``, every class at least 1."""
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    if n_total < num_classes:
        raise ValueError(f"n_total ({n_total}) must be >= num_classes ({num_classes})")

    ranks = np.arange(1, num_classes + 1, dtype=np.float64)
    counts = largest_remainder(ranks ** (-s), n_total)
    for k in np.flatnonzero(counts == 0):
        donor = int(np.argmax(counts))
        counts[donor] -= 1
        counts[k] = 1
    return [int(count) for count in counts]


def _split_counts(count: int, fractions: Sequence[float]) -> np.ndarray:
    """Split ``count`` samples over the splits, securing one sample per active split while supply lasts."""
    counts = largest_remainder(fractions, count) if count else np.zeros(len(fractions), dtype=np.int64)
    active = [i for i, fraction in enumerate(fractions) if fraction > 0]
    # test, val, train, pretrain
    for split_index in sorted(active, reverse=True):
        if counts[split_index] > 0:
            continue
        donor = int(np.argmax(counts))
        if counts[donor] <= 1:
            break
        counts[donor] -= 1
        counts[split_index] = 1
    return counts


class SyntheticDataset:
    """Generated dataset together with its planted class -> group assignment."""

    def __init__(self, dataset: Dataset, class_to_group: dict[int, int], class_counts: list[int]):
        self.dataset = dataset
        self.class_to_group = class_to_group
        self.class_counts = class_counts


def generate_synthetic(config: GenConfig) -> SyntheticDataset:
    """Draw a long-tailed dataset with a planted two-level Gaussian hierarchy.

    Group means are drawn with spread ``between_sigma``; class means are offset from their group mean with
    spread ``within_sigma``; samples are the class mean plus unit-variance noise scaled by ``within_sigma``.
    Background is zero-mean with spread ``background_sigma``. Classes are dealt to groups round-robin over a
    seeded permutation so group sizes differ by at most one.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    num_classes, dim = config.num_classes, config.dim

    group_means = rng.normal(0.0, config.between_sigma, size=(config.groups, dim))
    permutation = rng.permutation(num_classes)
    class_to_group = {int(permutation[i]) + 1: i % config.groups + 1 for i in range(num_classes)}
    class_means = np.stack(
        [
            group_means[class_to_group[class_id] - 1] + rng.normal(0.0, config.within_sigma, size=dim)
            for class_id in range(1, num_classes + 1)
        ]
    )

    counts = zipf_counts(num_classes, config.zipf_s, config.n_total)
    n_background = int(math.floor(config.background_ratio * config.n_total + 0.5))
    background_sigma = config.background_sigma if config.background_sigma is not None else config.between_sigma

    labels: list[int] = []
    splits: list[str] = []
    blocks: list[np.ndarray] = []
    for label, count in [(BACKGROUND, n_background)] + list(zip(range(1, num_classes + 1), counts)):
        if count == 0:
            continue
        if label == BACKGROUND:
            block = rng.normal(0.0, background_sigma, size=(count, dim))
        else:
            block = class_means[label - 1] + config.within_sigma * rng.standard_normal(size=(count, dim))
        tags = np.repeat(np.array(SPLITS, dtype=object), _split_counts(count, config.split_fractions))
        blocks.append(block)
        labels.extend([label] * count)
        splits.extend(rng.permutation(tags).tolist())

    features = np.concatenate(blocks) if blocks else np.empty((0, dim))
    order = rng.permutation(len(labels))
    ids = [f"s{i:06d}" for i in range(len(labels))]
    dataset = Dataset(
        ids,
        [splits[i] for i in order],
        [labels[i] for i in order],
        features[order],
        num_classes,
    )
    return SyntheticDataset(dataset, class_to_group, counts)


def write_truth(path: str, class_to_group: dict[int, int], config: Optional[GenConfig] = None) -> None:
    """Sidecar listing the planted ``<class_id> <group_id>`` assignment."""
    lines = []
    if config is not None:
        lines.append(f"# planted groups={config.groups} seed={config.seed}")
    lines.extend(f"{class_id} {group}" for class_id, group in sorted(class_to_group.items()))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_truth(path: str) -> dict[int, int]:
    assignment: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DatasetFormatError("expected '<class_id> <group_id>'", line_number)
            try:
                assignment[int(parts[0])] = int(parts[1])
            except ValueError as exc:
                raise DatasetFormatError("class and group ids must be integers", line_number) from exc
    return assignment
