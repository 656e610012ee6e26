"""Threshold-gated cascade scoring, cost accounting and threshold calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from ..core.dataset import Dataset, DatasetFormatError, format_float
from ..core.interfaces import TaskExecutor
from ..grouping.hierarchy import HierarchyTree, Node
from ..models.svm import SENTINEL_SCORE
from .ensemble import CascadeEnsemble, NodeModel, group_columns

SENTINEL_TOKEN = "-inf"


@dataclass(frozen=True)
class CostStats:
    """Node evaluations counted during one cascade run, per level."""

    evaluations: tuple[int, ...]
    group_counts: tuple[int, ...]
    num_samples: int

    @property
    def total_evaluations(self) -> int:
        return sum(self.evaluations)

    def n_b(self, l: int) -> float:
        """Average number of samples evaluated per node model at level l."""
        return self.evaluations[l - 1] / self.group_counts[l - 1]

    def n_m(self, l: int) -> int:
        """Number of node models at level l."""
        return self.group_counts[l - 1]

    def to_dict(self) -> dict[str, Any]:
        levels = []
        for l in range(1, len(self.evaluations) + 1):
            levels.append(
                {
                    "level": l,
                    "evaluations": self.evaluations[l - 1],
                    "n_b": self.n_b(l),
                    "n_m": self.n_m(l),
                    "n_b_times_n_m": self.n_b(l) * self.n_m(l),
                }
            )
        return {"num_samples": self.num_samples, "total_evaluations": self.total_evaluations, "levels": levels}


def _as_features(source: Dataset | np.ndarray) -> np.ndarray:
    if isinstance(source, Dataset):
        return source.features
    return np.atleast_2d(np.asarray(source, dtype=np.float64))


def cascade_batch(
    ensemble: CascadeEnsemble, source: Dataset | np.ndarray, executor: Optional[TaskExecutor] = None
) -> tuple[np.ndarray, CostStats]:
    """Score every sample through the gated tree.

    The root is evaluated for every sample. Child (l+1, j') is evaluated for a sample iff the maximum of its
    parent's gate scores over S_{l+1,j'} is >= T_l. Column k of the result scores ``tree.classes[k]``: the leaf
    SVM score when the leaf was reached, the sentinel otherwise.

    Raises:
        ValueError: for an empty input or a feature dimension the models do not accept
    """
    features = _as_features(source)
    num_samples = features.shape[0]
    if num_samples == 0:
        raise ValueError("cannot score an empty split")
    if features.shape[1] != ensemble.input_dim:
        raise ValueError(f"dimension mismatch: ensemble expects {ensemble.input_dim} features, got {features.shape[1]}")

    tree = ensemble.tree
    column = {class_id: k for k, class_id in enumerate(tree.classes)}
    scores = np.full((num_samples, len(tree.classes)), SENTINEL_SCORE)
    evaluations = [0] * tree.num_levels
    reached: dict[Node, np.ndarray] = {(1, 1): np.arange(num_samples)}

    for l in range(1, tree.num_levels + 1):
        live = [node for node in tree.nodes(l) if len(reached.get(node, ())) > 0]
        leaf_level = l == tree.num_levels

        def evaluate(node: Node) -> np.ndarray:
            rows = reached[node]
            batch = features if len(rows) == num_samples else features[rows]
            parts = ensemble.nodes[node]
            if leaf_level:
                return parts.svm_scores(batch, ensemble.normalize_features)
            return parts.gate_scores(batch, ensemble.gate_mode, ensemble.normalize_features)

        results = executor.map(evaluate, live) if executor is not None else [evaluate(node) for node in live]
        for node, result in zip(live, results):
            rows = reached[node]
            evaluations[l - 1] += len(rows)
            group = tree.group(*node)
            if leaf_level:
                scores[np.ix_(rows, [column[class_id] for class_id in group])] = result
                continue
            for child in tree.children(*node):
                gate = result[:, group_columns(group, tree.group(l + 1, child))].max(axis=1)
                reached[(l + 1, child)] = rows[gate >= ensemble.thresholds[l - 1]]

    return scores, CostStats(tuple(evaluations), tree.group_counts, num_samples)


def cascade_score(ensemble: CascadeEnsemble, sample: np.ndarray) -> np.ndarray:
    """Cascade scores of one feature vector over all positive classes."""
    vector = np.asarray(sample, dtype=np.float64)
    if vector.ndim != 1:
        raise ValueError(f"expected a single feature vector, got shape {vector.shape}")
    scores, _ = cascade_batch(ensemble, vector[None, :])
    return scores[0]


def _group_gate_values(
    parent: NodeModel,
    parent_group: Sequence[int],
    child_group: Sequence[int],
    validation: Dataset,
    gate_mode: str,
    normalize: bool,
) -> np.ndarray:
    rows = np.flatnonzero(np.isin(validation.labels, list(child_group)))
    if len(rows) == 0:
        raise ValueError(f"group {list(child_group)} has zero validation positives")
    gate = parent.gate_scores(validation.features[rows], gate_mode, normalize)
    return gate[:, group_columns(parent_group, child_group)].max(axis=1)


def calibrate_level(
    tree: HierarchyTree,
    nodes: Mapping[Node, NodeModel],
    level: int,
    validation: Dataset,
    recall_target: float,
    gate_mode: str = "svm",
    normalize: bool = True,
) -> float:
    """T_level: just below the score that keeps ``recall_target`` of every child group's validation positives.

    Each child group's positives are scored by its parent with every ancestor gate open; per group the sorted
    maxima give the quantile, and the level threshold is the smallest of them.
    """
    if not 0.0 < recall_target <= 1.0:
        raise ValueError(f"recall_target must be in (0, 1], got {recall_target}")
    if not 1 <= level < tree.num_levels:
        raise ValueError(f"only levels 1..{tree.num_levels - 1} have thresholds, got {level}")

    per_group = []
    for node in tree.nodes(level):
        parent_group = tree.group(*node)
        for child in tree.children(*node):
            values = np.sort(
                _group_gate_values(
                    nodes[node], parent_group, tree.group(level + 1, child), validation, gate_mode, normalize
                )
            )
            allowed_misses = min(math.floor((1.0 - recall_target) * len(values) + 1e-9), len(values) - 1)
            per_group.append(np.nextafter(values[allowed_misses], -np.inf))
    return float(min(per_group))


def calibrate_thresholds(ensemble: CascadeEnsemble, validation: Dataset, recall_target: float) -> list[float]:
    """T_1..T_{L-1} for the ensemble, one level at a time."""
    return [
        calibrate_level(
            ensemble.tree,
            ensemble.nodes,
            level,
            validation,
            recall_target,
            ensemble.gate_mode,
            ensemble.normalize_features,
        )
        for level in range(1, ensemble.num_levels)
    ]


def gate_recall(ensemble: CascadeEnsemble, validation: Dataset) -> dict[Node, float]:
    """Fraction of each non-root group's validation positives passing its own gate, ancestors open."""
    tree = ensemble.tree
    recall = {}
    for level in range(1, tree.num_levels):
        for node in tree.nodes(level):
            for child in tree.children(*node):
                values = _group_gate_values(
                    ensemble.nodes[node],
                    tree.group(*node),
                    tree.group(level + 1, child),
                    validation,
                    ensemble.gate_mode,
                    ensemble.normalize_features,
                )
                recall[(level + 1, child)] = float(np.mean(values >= ensemble.thresholds[level - 1]))
    return recall


def _format_score(value: float) -> str:
    return SENTINEL_TOKEN if value <= SENTINEL_SCORE else format_float(value)


def write_scores(path: str, ids: Sequence[str], scores: np.ndarray) -> None:
    """One line per sample: ``<id> <y_1> ... <y_C>``; the sentinel is written as ``-inf``."""
    if len(ids) != len(scores):
        raise ValueError(f"{len(ids)} ids but {len(scores)} score rows")
    with open(path, "w", encoding="utf-8") as handle:
        for sample_id, row in zip(ids, scores):
            handle.write(sample_id + " " + " ".join(_format_score(value) for value in row) + "\n")


def load_scores(path: str) -> tuple[list[str], np.ndarray]:
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            tokens = raw_line.split()
            if not tokens:
                continue
            if rows and len(tokens) - 1 != len(rows[0]):
                raise DatasetFormatError("dimension mismatch", line_number)
            try:
                values = [SENTINEL_SCORE if token == SENTINEL_TOKEN else float(token) for token in tokens[1:]]
            except ValueError as exc:
                raise DatasetFormatError("non-numeric score", line_number) from exc
            ids.append(tokens[0])
            rows.append(values)
    return ids, np.array(rows, dtype=np.float64).reshape(len(rows), -1)
