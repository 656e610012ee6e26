from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..core.dataset import Dataset
from ..models.mlp import MlpModel


@dataclass
class GroupingContext:
    """Everything a grouping method may draw on: the data, an optional trained model and optional files."""

    dataset: Dataset
    model: Optional[MlpModel] = None
    train_split: str = "train"
    val_split: str = "val"
    normalize_features: bool = True
    descriptor_file: Optional[str] = None
    taxonomy_file: Optional[str] = None

    @property
    def classes(self) -> tuple[int, ...]:
        return self.dataset.class_ids

    def training_data(self) -> Dataset:
        return self.dataset.split(self.train_split)

    def validation_data(self) -> Dataset:
        return self.dataset.split(self.val_split)
