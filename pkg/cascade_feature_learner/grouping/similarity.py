"""Class-to-class similarity matrices used to cluster classes into groups."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from ..core.dataset import Dataset, DatasetFormatError
from ..models.mlp import MlpModel, forward, softmax_accuracy_per_class

SYMMETRY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SimilarityMatrix:
    """C x C similarity over positive classes; ``matrix[a, b]`` compares ``class_ids[a]`` with ``class_ids[b]``."""

    matrix: np.ndarray
    class_ids: tuple[int, ...]
    method: str

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=np.float64)
        size = len(self.class_ids)
        if matrix.shape != (size, size):
            raise ValueError(f"similarity matrix must be {size}x{size}, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("similarity matrix has non-finite entries")
        if not np.allclose(matrix, matrix.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
            raise ValueError("similarity matrix is not symmetric")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "class_ids", tuple(int(c) for c in self.class_ids))

    def __getitem__(self, pair: tuple[int, int]) -> float:
        a, b = pair
        return float(self.matrix[self.class_ids.index(a), self.class_ids.index(b)])


def class_means(features: np.ndarray, labels: Sequence[int] | np.ndarray, class_ids: Sequence[int]) -> np.ndarray:
    """Mean feature vector per class, in ``class_ids`` order.

    Raises:
        ValueError: if a class has no samples
    """
    matrix = np.atleast_2d(np.asarray(features, dtype=np.float64))
    label_array = np.asarray(labels, dtype=np.int64)
    empty = [class_id for class_id in class_ids if not np.any(label_array == class_id)]
    if empty:
        raise ValueError(f"class(es) with zero samples: {empty}")
    return np.stack([matrix[label_array == class_id].mean(axis=0) for class_id in class_ids])


def visual_similarity(
    features: np.ndarray, labels: Sequence[int] | np.ndarray, class_ids: Optional[Sequence[int]] = None
) -> SimilarityMatrix:
    """Mean inner product over all cross pairs of two classes' feature vectors.

    The pairwise mean factorizes into the inner product of the two class means.
    """
    label_array = np.asarray(labels, dtype=np.int64)
    present = np.unique(label_array[label_array > 0])
    classes = tuple(class_ids) if class_ids is not None else tuple(int(c) for c in present)
    means = class_means(features, label_array, classes)
    gram = means @ means.T
    return SimilarityMatrix((gram + gram.T) / 2.0, classes, "visual")


def confusion_similarity(
    model: MlpModel, validation: Dataset, class_ids: Optional[Sequence[int]] = None
) -> SimilarityMatrix:
    """Symmetrized confusion between classes, from the top-scoring positive output of ``model``.

    Row a of the confusion matrix is the fraction of class-a validation samples whose best positive class is b.
    The result is (M + M^T) / 2 with a zero diagonal.

    Raises:
        ValueError: if the model does not score a class or a class is absent from the validation data
    """
    classes = tuple(class_ids) if class_ids is not None else model.class_set
    missing_head = sorted(set(classes) - set(model.class_set))
    if missing_head:
        raise ValueError(f"model does not score class(es) {missing_head}")
    absent = [class_id for class_id in classes if not np.any(validation.labels == class_id)]
    if absent:
        raise ValueError(f"class(es) absent from the validation split: {absent}")

    column = {class_id: k for k, class_id in enumerate(classes)}
    rows = np.flatnonzero(np.isin(validation.labels, classes))
    logits, _ = forward(model, validation.features[rows])
    head = np.array(model.class_set, dtype=np.int64)
    predicted = head[np.argmax(logits[:, 1:], axis=1)]

    confusion = np.zeros((len(classes), len(classes)))
    for label, guess in zip(validation.labels[rows], predicted):
        if int(guess) in column:
            confusion[column[int(label)], column[int(guess)]] += 1.0
    # rows are fractions of all class-a samples, guesses outside ``classes`` included
    sample_counts = np.array([np.sum(validation.labels[rows] == class_id) for class_id in classes], dtype=np.float64)
    confusion /= sample_counts[:, None]
    symmetric = (confusion + confusion.T) / 2.0
    np.fill_diagonal(symmetric, 0.0)
    return SimilarityMatrix(symmetric, classes, "confusion")


def scalar_similarity(descriptor: Mapping[int, float], method: str = "scalar") -> SimilarityMatrix:
    """-|v_a - v_b| for one scalar per class: the closer the values, the more similar the classes."""
    classes = tuple(sorted(descriptor))
    values = np.array([descriptor[class_id] for class_id in classes], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad = [class_id for class_id, value in zip(classes, values) if not np.isfinite(value)]
        raise ValueError(f"non-finite descriptor for class(es) {bad}")
    return SimilarityMatrix(-np.abs(values[:, None] - values[None, :]), classes, method)


def accuracy_descriptor(model: MlpModel, training: Dataset) -> dict[int, float]:
    """Softmax accuracy of every scored class on the training data."""
    return softmax_accuracy_per_class(model, training)


def count_descriptor(training: Dataset) -> dict[int, float]:
    return {class_id: float(count) for class_id, count in training.class_counts().items()}


def load_scalar_descriptor(path: str) -> dict[int, float]:
    """Read ``<class_id> <value>`` lines (``#`` comments allowed)."""
    descriptor: dict[int, float] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            tokens = raw_line.split("#", 1)[0].split()
            if not tokens:
                continue
            if len(tokens) != 2:
                raise DatasetFormatError("expected '<class_id> <value>'", line_number)
            try:
                class_id, value = int(tokens[0]), float(tokens[1])
            except ValueError as exc:
                raise DatasetFormatError("class id must be an integer and value a number", line_number) from exc
            if class_id in descriptor:
                raise DatasetFormatError(f"class {class_id} listed twice", line_number)
            descriptor[class_id] = value
    return descriptor
