"""One-vs-rest linear SVMs over learned features."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core.config import SvmConfig
from ..core.dataset import DatasetFormatError, format_float

SVM_TAG = "SVM1"

# Lowest finite double; written as "-inf" in score files.
SENTINEL_SCORE = float(np.finfo(np.float64).min)


@dataclass
class SvmBank:
    """One linear scorer w.x + b per class of ``class_set``.

    Classes in ``flagged`` lacked positives or negatives at training time and always score the sentinel.
    """

    class_set: tuple[int, ...]
    weights: np.ndarray
    biases: np.ndarray
    flagged: tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    def column_of(self, class_id: int) -> int:
        return self.class_set.index(class_id)


def hinge_objective(weights: np.ndarray, margins: np.ndarray, lam: float) -> float:
    """lambda/2 * |w|^2 + mean(max(0, 1 - margin))."""
    return float(0.5 * lam * weights @ weights + np.maximum(0.0, 1.0 - margins).mean())


def _fit_binary(augmented: np.ndarray, targets: np.ndarray, config: SvmConfig) -> np.ndarray:
    """Full-batch subgradient descent with step 1/(lambda t) on the bias-augmented problem.

    Iterates are projected onto the ball of radius 1/sqrt(lambda) that contains the optimum; the best
    iterate seen (the zero start included) is returned, so the objective never ends above its start.
    """
    lam = config.svm_lambda
    radius = 1.0 / np.sqrt(lam)
    weights = np.zeros(augmented.shape[1])
    best = weights.copy()
    best_objective = hinge_objective(weights, targets * (augmented @ weights), lam)
    n = len(targets)
    for t in range(1, config.svm_iterations + 1):
        margins = targets * (augmented @ weights)
        active = margins < 1.0
        subgradient = lam * weights - (targets[active] @ augmented[active]) / n
        weights = weights - subgradient / (lam * t)
        norm = np.linalg.norm(weights)
        if norm > radius:
            weights *= radius / norm
        objective = hinge_objective(weights, targets * (augmented @ weights), lam)
        if objective < best_objective:
            best, best_objective = weights.copy(), objective
    return best


def train_ovr_svm(
    features: np.ndarray,
    labels: Sequence[int] | np.ndarray,
    class_set: Sequence[int],
    config: Optional[SvmConfig] = None,
    debug: bool = False,
) -> SvmBank:
    """Train one binary SVM per class: that class against every other sample.

    Raises:
        ValueError: if there are no features
    """
    config = config or SvmConfig()
    config.validate()
    matrix = np.atleast_2d(np.asarray(features, dtype=np.float64))
    label_array = np.asarray(labels, dtype=np.int64)
    if matrix.shape[0] == 0:
        raise ValueError("cannot train SVMs on an empty feature set")
    if matrix.shape[0] != len(label_array):
        raise ValueError(f"dimension mismatch: {matrix.shape[0]} feature rows but {len(label_array)} labels")

    augmented = np.hstack([matrix, np.ones((matrix.shape[0], 1))])
    weights = np.zeros((len(class_set), matrix.shape[1]))
    biases = np.zeros(len(class_set))
    flagged = []
    for k, class_id in enumerate(class_set):
        targets = np.where(label_array == class_id, 1.0, -1.0)
        n_pos = int((targets > 0).sum())
        if n_pos == 0 or n_pos == len(targets):
            flagged.append(int(class_id))
            print(
                f"Warning: class {class_id} has {n_pos} positive(s) among {len(targets)} samples; "
                "it is scored at the sentinel minimum",
                file=sys.stderr,
            )
            continue
        solution = _fit_binary(augmented, targets, config)
        weights[k], biases[k] = solution[:-1], solution[-1]
        if debug:
            print(f"SVM class {class_id}: {n_pos} positive(s), |w| = {np.linalg.norm(solution):.4f}")

    return SvmBank(tuple(int(c) for c in class_set), weights, biases, tuple(flagged))


def svm_scores(bank: SvmBank, features: np.ndarray) -> np.ndarray:
    """Score matrix (n, |class_set|) of w.x + b; flagged classes hold the sentinel."""
    matrix = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if matrix.shape[1] != bank.dim:
        raise ValueError(f"dimension mismatch: SVM bank expects {bank.dim} features, got {matrix.shape[1]}")
    scores = matrix @ bank.weights.T + bank.biases
    for class_id in bank.flagged:
        scores[:, bank.column_of(class_id)] = SENTINEL_SCORE
    return scores


def save_svm(bank: SvmBank, path: str) -> None:
    lines = [
        SVM_TAG,
        "class_set " + " ".join(str(c) for c in bank.class_set),
        f"dim {bank.dim}",
        "flagged " + " ".join(str(c) for c in bank.flagged),
    ]
    for k, class_id in enumerate(bank.class_set):
        values = " ".join(format_float(value) for value in bank.weights[k])
        lines.append(f"{class_id} {format_float(bank.biases[k])} {values}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_svm(path: str) -> SvmBank:
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0].strip() != SVM_TAG:
        raise DatasetFormatError(f"malformed header, expected '{SVM_TAG}'", 1)
    try:
        header = [line.split() for line in lines[1:4]]
        for offset, key in enumerate(("class_set", "dim", "flagged")):
            if offset >= len(header) or not header[offset] or header[offset][0] != key:
                raise DatasetFormatError(f"expected '{key}'", offset + 2)
        class_set = tuple(int(token) for token in header[0][1:])
        dim = int(header[1][1])
        flagged = tuple(int(token) for token in header[2][1:])
    except DatasetFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise DatasetFormatError(f"malformed SVM header: {exc}", 2) from exc

    weights = np.zeros((len(class_set), dim))
    biases = np.zeros(len(class_set))
    for k, class_id in enumerate(class_set):
        line_number = 5 + k
        if line_number > len(lines):
            raise DatasetFormatError("unexpected end of file", line_number)
        tokens = lines[line_number - 1].split()
        if len(tokens) != dim + 2 or tokens[0] != str(class_id):
            raise DatasetFormatError(f"expected '{class_id} <bias> <{dim} weights>'", line_number)
        try:
            biases[k] = float(tokens[1])
            weights[k] = [float(token) for token in tokens[2:]]
        except ValueError as exc:
            raise DatasetFormatError("non-numeric parameter", line_number) from exc
    return SvmBank(class_set, weights, biases, flagged)
