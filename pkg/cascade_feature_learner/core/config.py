"""Flat key=value configuration shared by the library and the CLI."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union, get_args, get_origin, get_type_hints

from .dataset import DatasetFormatError

SPLIT_FRACTION_KEYS = ("pretrain", "train", "val", "test")


@dataclass
class GenConfig:
    """Synthetic long-tailed dataset with a planted two-level class hierarchy."""

    num_classes: int = 40
    dim: int = 32
    zipf_s: float = 1.0
    n_total: int = 4000
    groups: int = 4
    within_sigma: float = 0.3
    between_sigma: float = 1.0
    background_sigma: Optional[float] = None
    background_ratio: float = 3.0
    split_fractions: tuple[float, ...] = (0.25, 0.35, 0.2, 0.2)
    seed: int = 0

    def validate(self) -> None:
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.zipf_s < 0:
            raise ValueError(f"zipf_s must be >= 0, got {self.zipf_s}")
        if self.n_total < self.num_classes:
            raise ValueError(f"n_total ({self.n_total}) must be >= num_classes ({self.num_classes})")
        if not 1 <= self.groups <= self.num_classes:
            raise ValueError(f"groups must be in [1, num_classes], got {self.groups}")
        sigmas = [self.within_sigma, self.between_sigma]
        if self.background_sigma is not None:
            sigmas.append(self.background_sigma)
        if any(sigma <= 0 for sigma in sigmas):
            raise ValueError("all sigmas must be > 0")
        if self.background_ratio < 0:
            raise ValueError(f"background_ratio must be >= 0, got {self.background_ratio}")
        if len(self.split_fractions) != len(SPLIT_FRACTION_KEYS):
            raise ValueError(
                f"split_fractions needs {len(SPLIT_FRACTION_KEYS)} values ({', '.join(SPLIT_FRACTION_KEYS)})"
            )
        if any(fraction < 0 for fraction in self.split_fractions) or not math.isclose(
            sum(self.split_fractions), 1.0, abs_tol=1e-9
        ):
            raise ValueError(f"split_fractions must be non-negative and sum to 1, got {self.split_fractions}")


@dataclass
class TrainConfig:
    """Mini-batch gradient descent with momentum and weight decay."""

    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 30
    batch_size: int = 64
    batch_source: str = "plain"
    pos_fraction: float = 0.25
    init_scale: float = 1.0
    hidden_dims: tuple[int, ...] = (64, 32)
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.batch_source not in ("plain", "uniform"):
            raise ValueError(f"batch_source must be 'plain' or 'uniform', got '{self.batch_source}'")
        if not 0 < self.pos_fraction < 1:
            raise ValueError(f"pos_fraction must be in (0, 1), got {self.pos_fraction}")
        if self.init_scale < 0:
            raise ValueError(f"init_scale must be >= 0, got {self.init_scale}")
        if any(width < 1 for width in self.hidden_dims):
            raise ValueError(f"hidden_dims must be positive, got {self.hidden_dims}")


@dataclass
class SvmConfig:
    """L2-regularized hinge loss minimized by full-batch subgradient descent with step 1/(lambda t)."""

    svm_lambda: float = 1e-4
    svm_iterations: int = 1000

    def validate(self) -> None:
        if self.svm_lambda <= 0:
            raise ValueError(f"svm_lambda must be > 0, got {self.svm_lambda}")
        if self.svm_iterations < 1:
            raise ValueError(f"svm_iterations must be >= 1, got {self.svm_iterations}")


@dataclass
class PipelineConfig:
    """Hierarchy, cascade and evaluation settings."""

    group_counts: tuple[int, ...] = (1, 4)
    grouping_method: str = "visual"
    strategy: tuple[int, ...] = (0, 1, 2)
    recall_target: float = 0.99
    negative_floor: int = 100
    min_node_epochs: int = 5
    normalize_features: bool = True
    gate_mode: str = "svm"
    pretrain_split: str = "pretrain"
    train_split: str = "train"
    val_split: str = "val"
    eval_split: str = "test"
    descriptor_file: Optional[str] = None
    taxonomy_file: Optional[str] = None

    def validate(self) -> None:
        if not self.group_counts or self.group_counts[0] != 1:
            raise ValueError(f"group_counts must start with 1, got {self.group_counts}")
        if any(b < a for a, b in zip(self.group_counts, self.group_counts[1:])):
            raise ValueError(f"group_counts must be non-decreasing, got {self.group_counts}")
        if not self.strategy or self.strategy[0] != 0 or any(b <= a for a, b in zip(self.strategy, self.strategy[1:])):
            raise ValueError(f"strategy must start at 0 and be strictly increasing, got {self.strategy}")
        if not 0 < self.recall_target <= 1:
            raise ValueError(f"recall_target must be in (0, 1], got {self.recall_target}")
        if self.negative_floor < 0:
            raise ValueError(f"negative_floor must be >= 0, got {self.negative_floor}")
        if self.min_node_epochs < 0:
            raise ValueError(f"min_node_epochs must be >= 0, got {self.min_node_epochs}")
        if self.gate_mode not in ("svm", "softmax"):
            raise ValueError(f"gate_mode must be 'svm' or 'softmax', got '{self.gate_mode}'")


@dataclass
class RunConfig:
    """Every configurable value of a run, grouped by concern."""

    gen: GenConfig = field(default_factory=GenConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def sections(self) -> tuple[Any, ...]:
        return (self.gen, self.train, self.svm, self.pipeline)

    def validate(self) -> None:
        for section in self.sections():
            section.validate()

    def with_seed(self, seed: int) -> RunConfig:
        """Copy with the same seed applied to generation and training."""
        return RunConfig(
            gen=dataclasses.replace(self.gen, seed=seed),
            train=dataclasses.replace(self.train, seed=seed),
            svm=dataclasses.replace(self.svm),
            pipeline=dataclasses.replace(self.pipeline),
        )

    def snapshot(self) -> dict[str, Any]:
        """Flat key -> value view of the effective configuration."""
        result: dict[str, Any] = {}
        for section in self.sections():
            for item in dataclasses.fields(section):
                value = getattr(section, item.name)
                result[item.name] = list(value) if isinstance(value, tuple) else value
        return result


def load_config_file(path: str) -> dict[str, str]:
    """Parse a flat key=value file; '#' starts a comment."""
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DatasetFormatError(f"expected key=value in config file {path}", line_number)
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise DatasetFormatError(f"empty key in config file {path}", line_number)
            entries[key] = value.strip()
    return entries


def _convert(raw: str, annotation: Any, key: str) -> Any:
    origin = get_origin(annotation)
    if origin is Union:
        inner = [arg for arg in get_args(annotation) if arg is not type(None)]
        if raw.lower() in ("", "none"):
            return None
        return _convert(raw, inner[0], key)
    if origin is tuple:
        item_type = get_args(annotation)[0]
        return tuple(_convert(part.strip(), item_type, key) for part in raw.split(",") if part.strip())
    try:
        if annotation is bool:
            lowered = raw.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return lowered in ("true", "1", "yes")
        if annotation is int:
            return int(raw)
        if annotation is float:
            return float(raw)
    except ValueError as exc:
        raise ValueError(f"Invalid value for config key '{key}': {raw!r}") from exc
    return raw


def apply_overrides(config: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """Apply string overrides to a copy of ``config``; unknown keys are rejected.

    ``seed`` is shared by the generator and training sections.
    """
    result = RunConfig(
        gen=dataclasses.replace(config.gen),
        train=dataclasses.replace(config.train),
        svm=dataclasses.replace(config.svm),
        pipeline=dataclasses.replace(config.pipeline),
    )
    known: set[str] = set()
    for section in result.sections():
        hints = get_type_hints(type(section))
        for item in dataclasses.fields(section):
            known.add(item.name)
            if item.name in overrides:
                setattr(section, item.name, _convert(overrides[item.name], hints[item.name], item.name))

    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ValueError(f"Unknown config keys: {', '.join(unknown)}. Available keys: {', '.join(sorted(known))}")
    result.validate()
    return result
