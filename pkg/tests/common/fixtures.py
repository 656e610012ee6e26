"""Small datasets and configurations shared by the test suites."""

from typing import Optional, Sequence

import numpy as np

from cascade_feature_learner.core.config import GenConfig, PipelineConfig, RunConfig, SvmConfig, TrainConfig
from cascade_feature_learner.core.dataset import Dataset
from cascade_feature_learner.datagen.synthetic import SyntheticDataset, generate_synthetic


def small_config(seed: int = 0, group_counts: Sequence[int] = (1, 2), **pipeline: object) -> RunConfig:
    """A configuration that trains in well under a second per node."""
    return RunConfig(
        gen=GenConfig(
            num_classes=8,
            dim=6,
            n_total=480,
            groups=2,
            within_sigma=0.3,
            between_sigma=1.5,
            background_ratio=1.0,
            seed=seed,
        ),
        train=TrainConfig(epochs=4, batch_size=16, hidden_dims=(12,), seed=seed),
        svm=SvmConfig(svm_iterations=60),
        pipeline=PipelineConfig(
            group_counts=tuple(group_counts),
            strategy=(0, 1, 2),
            negative_floor=20,
            min_node_epochs=1,
            **pipeline,  # type: ignore[arg-type]
        ),
    )


def small_synthetic(seed: int = 0, config: Optional[RunConfig] = None) -> SyntheticDataset:
    return generate_synthetic((config or small_config(seed)).gen)


def make_dataset(
    labels: Sequence[int],
    features: Optional[np.ndarray] = None,
    splits: Optional[Sequence[str]] = None,
    num_classes: Optional[int] = None,
    dim: int = 2,
    seed: int = 0,
) -> Dataset:
    """Dataset from explicit labels; features default to seeded Gaussian noise, splits to 'train'."""
    n = len(labels)
    if features is None:
        features = np.random.default_rng(seed).normal(size=(n, dim))
    return Dataset(
        [f"x{i:04d}" for i in range(n)],
        list(splits) if splits is not None else ["train"] * n,
        list(labels),
        features,
        num_classes if num_classes is not None else max(labels, default=0),
    )


def separable_dataset(num_classes: int = 3, per_class: int = 20, background: int = 30, seed: int = 0) -> Dataset:
    """Well separated Gaussian blobs: class k around 4 * e_k, background around the origin."""
    rng = np.random.default_rng(seed)
    dim = num_classes + 1
    labels = [0] * background + [k for k in range(1, num_classes + 1) for _ in range(per_class)]
    centers = np.zeros((num_classes + 1, dim))
    for k in range(1, num_classes + 1):
        centers[k, k - 1] = 4.0
    features = centers[labels] + 0.3 * rng.normal(size=(len(labels), dim))
    return make_dataset(labels, features, num_classes=num_classes)
