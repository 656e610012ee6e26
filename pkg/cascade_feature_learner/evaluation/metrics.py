"""Ranking average precision over labeled samples."""

from __future__ import annotations

import sys
from typing import Mapping, Optional, Sequence

import numpy as np

from ..sampling.subsets import round_half_up


def _tie_ranks(num_samples: int, ids: Optional[Sequence[str]]) -> np.ndarray:
    if ids is None:
        return np.arange(num_samples)
    if len(ids) != num_samples:
        raise ValueError(f"{len(ids)} ids for {num_samples} scores")
    _, ranks = np.unique(np.asarray(ids, dtype=object).astype(str), return_inverse=True)
    return ranks


def average_precision(
    scores: Sequence[float] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    ids: Optional[Sequence[str]] = None,
) -> float:
    """Mean over positives of the precision at each positive's rank.

    Samples are ranked by descending score; equal scores are ordered by ascending sample id (by position when
    ``ids`` is not given).

    Raises:
        ValueError: if there is no positive
    """
    score_array = np.asarray(scores, dtype=np.float64)
    relevant = np.asarray(labels).astype(bool)
    if score_array.shape != relevant.shape:
        raise ValueError(f"{len(score_array)} scores but {len(relevant)} labels")
    positives = int(relevant.sum())
    if positives == 0:
        raise ValueError("average precision needs at least one positive")
    order = np.lexsort((_tie_ranks(len(score_array), ids), -score_array))
    ranked = relevant[order]
    hits = np.cumsum(ranked)
    ranks = np.arange(1, len(ranked) + 1)
    return float((hits[ranked] / ranks[ranked]).sum() / positives)


def mean_ap(
    scores: np.ndarray,
    labels: Sequence[int] | np.ndarray,
    class_ids: Sequence[int],
    ids: Optional[Sequence[str]] = None,
    skip_missing: bool = False,
) -> tuple[float, dict[int, float]]:
    """mAP over ``class_ids``; column k of ``scores`` scores ``class_ids[k]``.

    Raises:
        ValueError: if a class has no positive among ``labels`` (unless ``skip_missing``, which drops it with a
            warning)
    """
    matrix = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    label_array = np.asarray(labels, dtype=np.int64)
    if matrix.shape != (len(label_array), len(class_ids)):
        raise ValueError(f"score matrix shape {matrix.shape} does not match {len(label_array)} x {len(class_ids)}")

    per_class: dict[int, float] = {}
    missing = []
    for k, class_id in enumerate(class_ids):
        relevant = label_array == class_id
        if not relevant.any():
            missing.append(int(class_id))
            continue
        per_class[int(class_id)] = average_precision(matrix[:, k], relevant, ids)
    if missing:
        if not skip_missing:
            raise ValueError(f"class(es) with zero positives in the evaluation split: {missing}")
        print(f"Warning: class(es) {missing} have no positives and are left out of the mAP", file=sys.stderr)
    if not per_class:
        raise ValueError("no class has positives in the evaluation split")
    return float(np.mean(list(per_class.values()))), per_class


def tail_classes(class_counts: Mapping[int, int], fraction: float = 0.5) -> list[int]:
    """The ``fraction`` of classes with the fewest samples (ties by class id)."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    ordered = sorted(class_counts, key=lambda class_id: (class_counts[class_id], class_id))
    size = max(1, round_half_up(fraction * len(ordered)))
    return sorted(ordered[:size])


def subset_map(per_class_ap: Mapping[int, float], classes: Sequence[int]) -> float:
    """Mean AP over the classes of ``classes`` that were evaluated."""
    values = [per_class_ap[class_id] for class_id in classes if class_id in per_class_ap]
    if not values:
        raise ValueError("none of the requested classes was evaluated")
    return float(np.mean(values))
