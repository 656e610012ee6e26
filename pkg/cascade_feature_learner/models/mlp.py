"""Shallow rectifier network with per-layer freeze flags and a (|class_set| + 1)-way softmax head."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core.config import TrainConfig
from ..core.dataset import BACKGROUND, Dataset, DatasetFormatError, format_float
from ..core.interfaces import BatchSource
from ..sampling.batches import create_batch_source

MODEL_TAG = "MLP1"

LayerGradient = Optional[tuple[np.ndarray, np.ndarray]]


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        super().__init__(f"Training diverged at epoch {epoch} (loss={loss})")


@dataclass
class MlpModel:
    """Layer stack d -> h1 -> ... -> hH -> K with K = |class_set| + 1.

    ``weights[i]`` has shape (layer_dims[i], layer_dims[i + 1]). Output 0 scores background; output k scores
    ``class_set[k - 1]``.
    """

    layer_dims: tuple[int, ...]
    class_set: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    freeze_mask: tuple[bool, ...]
    init_scale: float = 1.0

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_width(self) -> int:
        return self.layer_dims[-1]

    @property
    def feature_dim(self) -> int:
        """Width of the last hidden layer (the input width for a model without hidden layers)."""
        return self.layer_dims[-2]

    def copy(self) -> MlpModel:
        return MlpModel(
            layer_dims=self.layer_dims,
            class_set=self.class_set,
            weights=[weight.copy() for weight in self.weights],
            biases=[bias.copy() for bias in self.biases],
            freeze_mask=self.freeze_mask,
            init_scale=self.init_scale,
        )

    def target_indices(self, labels: Sequence[int] | np.ndarray) -> np.ndarray:
        """Map class labels to output indices; raises ValueError for labels this head does not score."""
        lookup = {BACKGROUND: 0}
        lookup.update({class_id: k + 1 for k, class_id in enumerate(self.class_set)})
        try:
            return np.array([lookup[int(label)] for label in labels], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]} is outside the model class set {list(self.class_set)}") from exc


def _uniform_layer(rng: np.random.Generator, fan_in: int, fan_out: int, init_scale: float) -> np.ndarray:
    limit = init_scale / np.sqrt(fan_in)
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_mlp(
    layer_dims: Sequence[int],
    class_set: Sequence[int],
    seed: int,
    init_scale: float = 1.0,
    freeze_mask: Optional[Sequence[bool]] = None,
) -> MlpModel:
    """Weights i.i.d. uniform in [-s, s] with s = init_scale / sqrt(fan_in); zero biases."""
    if not class_set:
        raise ValueError("class_set must not be empty")
    dims = tuple(int(width) for width in layer_dims)
    if len(dims) < 2 or any(width < 1 for width in dims):
        raise ValueError(f"layer_dims needs at least two positive widths, got {list(layer_dims)}")
    if dims[-1] != len(class_set) + 1:
        raise ValueError(f"output width {dims[-1]} must equal |class_set| + 1 = {len(class_set) + 1}")
    mask = tuple(bool(flag) for flag in freeze_mask) if freeze_mask is not None else (False,) * (len(dims) - 1)
    if len(mask) != len(dims) - 1:
        raise ValueError(f"freeze_mask needs {len(dims) - 1} entries, got {len(mask)}")

    rng = np.random.default_rng(seed)
    weights = [_uniform_layer(rng, fan_in, fan_out, init_scale) for fan_in, fan_out in zip(dims, dims[1:])]
    biases = [np.zeros(fan_out) for fan_out in dims[1:]]
    return MlpModel(dims, tuple(int(c) for c in class_set), weights, biases, mask, float(init_scale))


def default_layer_dims(dim: int, num_classes: int, hidden_dims: Sequence[int] = (64, 32)) -> tuple[int, ...]:
    return (dim, *hidden_dims, num_classes + 1)


def _as_matrix(model: MlpModel, features: np.ndarray) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if matrix.shape[1] != model.input_dim:
        raise ValueError(f"dimension mismatch: model expects {model.input_dim} features, got {matrix.shape[1]}")
    return matrix


def _forward_pass(model: MlpModel, matrix: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Logits plus every layer input and every hidden pre-activation (kept for backpropagation)."""
    inputs = [matrix]
    pre_activations = []
    activation = matrix
    for weight, bias in zip(model.weights[:-1], model.biases[:-1]):
        z = activation @ weight + bias
        pre_activations.append(z)
        activation = np.maximum(z, 0.0)
        inputs.append(activation)
    logits = activation @ model.weights[-1] + model.biases[-1]
    return logits, inputs, pre_activations


def forward(model: MlpModel, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Logits and last-hidden-layer activations for one sample (1-D) or a batch (2-D)."""
    single = np.asarray(features).ndim == 1
    logits, inputs, _ = _forward_pass(model, _as_matrix(model, features))
    hidden = inputs[-1]
    if single:
        return logits[0], hidden[0]
    return logits, hidden


def _log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite logits")
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_xent(logits: np.ndarray, target_class: int) -> tuple[float, np.ndarray]:
    """Cross-entropy loss -log p_target and the softmax probabilities (max-subtracted for stability)."""
    row = np.asarray(logits, dtype=np.float64).reshape(1, -1)
    if not 0 <= target_class < row.shape[1]:
        raise ValueError(f"target {target_class} outside output width {row.shape[1]}")
    log_probs = _log_softmax_rows(row)[0]
    return float(-log_probs[target_class]), np.exp(log_probs)


def _loss_and_gradients(
    model: MlpModel, matrix: np.ndarray, targets: np.ndarray
) -> tuple[float, list[LayerGradient]]:
    logits, inputs, pre_activations = _forward_pass(model, matrix)
    log_probs = _log_softmax_rows(logits)
    rows = np.arange(len(targets))
    loss = float(-log_probs[rows, targets].sum())

    grads: list[LayerGradient] = [None] * model.num_layers
    trainable = [i for i, frozen in enumerate(model.freeze_mask) if not frozen]
    if not trainable:
        return loss, grads

    # sum_n (p_nc - t_nc) at the output, pushed down to the lowest trainable layer
    delta = np.exp(log_probs)
    delta[rows, targets] -= 1.0
    lowest = trainable[0]
    for i in range(model.num_layers - 1, lowest - 1, -1):
        if not model.freeze_mask[i]:
            grads[i] = (inputs[i].T @ delta, delta.sum(axis=0))
        if i > lowest:
            delta = (delta @ model.weights[i].T) * (pre_activations[i - 1] > 0)
    return loss, grads


def batch_loss(model: MlpModel, features: np.ndarray, targets: Sequence[int] | np.ndarray) -> float:
    """Summed cross-entropy over a batch."""
    logits, _, _ = _forward_pass(model, _as_matrix(model, features))
    log_probs = _log_softmax_rows(logits)
    target_array = np.asarray(targets, dtype=np.int64)
    return float(-log_probs[np.arange(len(target_array)), target_array].sum())


def gradients(model: MlpModel, features: np.ndarray, targets: Sequence[int] | np.ndarray) -> list[LayerGradient]:
    """Summed loss gradient per layer as (dW, db); frozen layers are None.

    ``targets`` are output indices (0 = background), see ``MlpModel.target_indices``.
    """
    matrix = _as_matrix(model, features)
    target_array = np.asarray(targets, dtype=np.int64)
    if len(target_array) == 0:
        raise ValueError("gradient batch must not be empty")
    if len(target_array) != len(matrix):
        raise ValueError(f"dimension mismatch: {len(matrix)} feature rows but {len(target_array)} targets")
    if target_array.min() < 0 or target_array.max() >= model.output_width:
        raise ValueError(f"targets must lie in [0, {model.output_width})")
    _, grads = _loss_and_gradients(model, matrix, target_array)
    return grads


def train(
    model: MlpModel,
    data: Dataset,
    config: TrainConfig,
    batch_source: Optional[BatchSource] = None,
    debug: bool = False,
) -> tuple[MlpModel, list[float]]:
    """Momentum SGD with weight decay on the unfrozen layers of a private copy of ``model``.

    Each step uses the batch-mean gradient. Returns the trained copy and the mean per-sample loss of every
    epoch.

    Raises:
        ValueError: if a label is outside the model's class set
        TrainingDivergedError: if an epoch ends with a non-finite loss
    """
    config.validate()
    if data.dim != model.input_dim:
        raise ValueError(f"dimension mismatch: model expects {model.input_dim} features, got {data.dim}")
    targets = model.target_indices(data.labels)
    source = batch_source or create_batch_source(config.batch_source, config.pos_fraction)
    trained = model.copy()
    rng = np.random.default_rng(config.seed)
    trainable = [i for i, frozen in enumerate(trained.freeze_mask) if not frozen]
    velocity_w = {i: np.zeros_like(trained.weights[i]) for i in trainable}
    velocity_b = {i: np.zeros_like(trained.biases[i]) for i in trainable}
    trace: list[float] = []

    if len(data) == 0:
        return trained, trace

    for epoch in range(config.epochs):
        epoch_loss = 0.0
        seen = 0
        for batch in source.epoch_batches(data, config.batch_size, rng):
            try:
                loss, grads = _loss_and_gradients(trained, data.features[batch], targets[batch])
            except ValueError as exc:
                raise TrainingDivergedError(epoch, float("nan")) from exc
            epoch_loss += loss
            seen += len(batch)
            for i in trainable:
                layer_grad = grads[i]
                assert layer_grad is not None
                grad_w, grad_b = layer_grad
                velocity_w[i] = config.momentum * velocity_w[i] - config.learning_rate * (
                    grad_w / len(batch) + config.weight_decay * trained.weights[i]
                )
                velocity_b[i] = config.momentum * velocity_b[i] - config.learning_rate * (grad_b / len(batch))
                trained.weights[i] += velocity_w[i]
                trained.biases[i] += velocity_b[i]

        mean_loss = epoch_loss / max(seen, 1)
        if not np.isfinite(mean_loss):
            raise TrainingDivergedError(epoch, mean_loss)
        trace.append(mean_loss)
        if debug:
            print(f"epoch {epoch + 1}/{config.epochs}: loss {mean_loss:.6f}")

    return trained, trace


def spawn_child(parent: MlpModel, class_subset: Sequence[int], seed: int) -> MlpModel:
    """Copy the parent's hidden layers and attach a fresh (|class_subset| + 1)-way output layer."""
    if not class_subset:
        raise ValueError("class_subset must not be empty")
    rng = np.random.default_rng(seed)
    width = len(class_subset) + 1
    fan_in = parent.feature_dim
    return MlpModel(
        layer_dims=(*parent.layer_dims[:-1], width),
        class_set=tuple(int(c) for c in class_subset),
        weights=[weight.copy() for weight in parent.weights[:-1]]
        + [_uniform_layer(rng, fan_in, width, parent.init_scale)],
        biases=[bias.copy() for bias in parent.biases[:-1]] + [np.zeros(width)],
        freeze_mask=parent.freeze_mask,
        init_scale=parent.init_scale,
    )


def with_freeze_mask(model: MlpModel, freeze_mask: Sequence[bool]) -> MlpModel:
    mask = tuple(bool(flag) for flag in freeze_mask)
    if len(mask) != model.num_layers:
        raise ValueError(f"freeze_mask needs {model.num_layers} entries, got {len(mask)}")
    result = model.copy()
    result.freeze_mask = mask
    return result


def freeze_lower(model: MlpModel, k: int) -> MlpModel:
    """Freeze the first ``k`` layers, counting from the input."""
    if not 0 <= k <= model.num_layers:
        raise ValueError(f"k must be in [0, {model.num_layers}], got {k}")
    return with_freeze_mask(model, [i < k for i in range(model.num_layers)])


def freeze_all(model: MlpModel) -> MlpModel:
    return freeze_lower(model, model.num_layers)


def extract_features(model: MlpModel, features: np.ndarray, normalize: bool = True) -> np.ndarray:
    """Last-hidden-layer activations per sample, L2-normalized by default (zero rows stay zero)."""
    _, inputs, _ = _forward_pass(model, _as_matrix(model, features))
    hidden = inputs[-1]
    if not normalize:
        return hidden.copy()
    norms = np.linalg.norm(hidden, axis=1, keepdims=True)
    return np.divide(hidden, norms, out=np.zeros_like(hidden), where=norms > 0)


def predict_classes(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Arg-max class label per sample (0 for background)."""
    logits, _ = forward(model, np.atleast_2d(features))
    labels = np.array((BACKGROUND, *model.class_set), dtype=np.int64)
    return labels[np.argmax(logits, axis=1)]


def softmax_accuracy_per_class(model: MlpModel, dataset: Dataset) -> dict[int, float]:
    """Fraction of each scored class's samples that the softmax head labels correctly."""
    predicted = predict_classes(model, dataset.features) if len(dataset) else np.empty(0, np.int64)
    accuracy = {}
    for class_id in model.class_set:
        mask = dataset.labels == class_id
        accuracy[class_id] = float((predicted[mask] == class_id).mean()) if mask.any() else 0.0
    return accuracy


def save_mlp(model: MlpModel, path: str) -> None:
    lines = [
        MODEL_TAG,
        "class_set " + " ".join(str(c) for c in model.class_set),
        "layer_dims " + " ".join(str(width) for width in model.layer_dims),
        "freeze_mask " + " ".join("1" if frozen else "0" for frozen in model.freeze_mask),
        f"init_scale {format_float(model.init_scale)}",
    ]
    for i, (weight, bias) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"W{i}")
        lines.extend(" ".join(format_float(value) for value in row) for row in weight)
        lines.append(f"b{i}")
        lines.append(" ".join(format_float(value) for value in bias))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def _expect(lines: list[str], position: int, key: str) -> list[str]:
    if position >= len(lines):
        raise DatasetFormatError(f"unexpected end of file, expected '{key}'", position + 1)
    tokens = lines[position].split()
    if not tokens or tokens[0] != key:
        raise DatasetFormatError(f"expected '{key}'", position + 1)
    return tokens[1:]


def _floats(lines: list[str], position: int, width: int) -> np.ndarray:
    if position >= len(lines):
        raise DatasetFormatError("unexpected end of file", position + 1)
    try:
        values = np.array([float(token) for token in lines[position].split()])
    except ValueError as exc:
        raise DatasetFormatError("non-numeric parameter", position + 1) from exc
    if len(values) != width:
        raise DatasetFormatError(f"expected {width} values", position + 1)
    return values


def load_mlp(path: str) -> MlpModel:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line for line in handle.read().splitlines() if line.strip()]
    if not lines or lines[0].strip() != MODEL_TAG:
        raise DatasetFormatError(f"malformed header, expected '{MODEL_TAG}'", 1)
    try:
        class_set = tuple(int(token) for token in _expect(lines, 1, "class_set"))
        layer_dims = tuple(int(token) for token in _expect(lines, 2, "layer_dims"))
        freeze_mask = tuple(token == "1" for token in _expect(lines, 3, "freeze_mask"))
        init_scale = float(_expect(lines, 4, "init_scale")[0])
    except DatasetFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise DatasetFormatError(f"malformed model header: {exc}", 2) from exc

    position = 5
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(layer_dims, layer_dims[1:])):
        _expect(lines, position, f"W{i}")
        weights.append(np.stack([_floats(lines, position + 1 + row, fan_out) for row in range(fan_in)]))
        position += 1 + fan_in
        _expect(lines, position, f"b{i}")
        biases.append(_floats(lines, position + 1, fan_out))
        position += 2

    if len(freeze_mask) != len(weights) or layer_dims[-1] != len(class_set) + 1:
        raise DatasetFormatError("model header is inconsistent with its layers", 2)
    return MlpModel(layer_dims, class_set, weights, biases, freeze_mask, init_scale)
