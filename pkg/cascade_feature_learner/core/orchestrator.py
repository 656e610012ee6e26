from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .config import RunConfig
from .dataset import Dataset, format_float
from .interfaces import GroupingMethod, TaskExecutor
from ..cascade.ensemble import CascadeEnsemble
from ..cascade.hier_train import StrategyPath, pretrain_base, train_hierarchy
from ..cascade.inference import CostStats, calibrate_thresholds, cascade_batch, gate_recall
from ..evaluation.metrics import mean_ap, subset_map, tail_classes
from ..evaluation.report import EvalReport
from ..executors import create_executor
from ..grouping.confusion_grouping import ConfusionGrouping
from ..grouping.context import GroupingContext
from ..grouping.descriptor_grouping import AccuracyGrouping, CountGrouping, ScalarFileGrouping
from ..grouping.hierarchy import HierarchyTree
from ..grouping.random_grouping import RandomGrouping
from ..grouping.taxonomy_grouping import TaxonomyFileGrouping
from ..grouping.visual_grouping import VisualGrouping
from ..models.mlp import MlpModel


@dataclass
class PipelineResult:
    base: MlpModel
    tree: HierarchyTree
    ensemble: CascadeEnsemble
    report: EvalReport
    scores: np.ndarray


class Orchestrator:
    """Runs the pipeline stages: pretrain, cluster, hierarchical training, calibration, inference, evaluation."""

    def __init__(
        self,
        config: Optional[RunConfig] = None,
        debug: bool = False,
        deterministic: bool = True,
        grouping_method: Optional[str] = None,
        executor: Optional[TaskExecutor] = None,
    ):
        self.config = config or RunConfig()
        self.config.validate()
        self.debug = debug
        self.executor = executor or create_executor(deterministic, debug=debug)

        all_methods: list[GroupingMethod] = [
            VisualGrouping(debug=debug),
            ConfusionGrouping(debug=debug),
            AccuracyGrouping(debug=debug),
            CountGrouping(debug=debug),
            ScalarFileGrouping(debug=debug),
            RandomGrouping(debug=debug),
            TaxonomyFileGrouping(debug=debug),
        ]
        self.methods = {method.NAME: method for method in all_methods}

        selected = grouping_method or self.config.pipeline.grouping_method
        if selected not in self.methods:
            raise ValueError(
                f"Invalid grouping method: {selected}. Available methods: {', '.join(sorted(self.methods))}"
            )
        self.grouping = self.methods[selected]
        if self.debug:
            print(f"Selected grouping method: {self.grouping.NAME}")

    def pretrain(self, dataset: Dataset) -> MlpModel:
        pretrain_split = dataset.split(self.config.pipeline.pretrain_split)
        if self.debug:
            print(f"Pretraining base on {len(pretrain_split)} samples of split '{self.config.pipeline.pretrain_split}'")
        return pretrain_base(pretrain_split, self.config.train, debug=self.debug)

    def cluster(
        self,
        dataset: Dataset,
        model: Optional[MlpModel],
        group_counts: Optional[Sequence[int]] = None,
        seed: Optional[int] = None,
    ) -> HierarchyTree:
        """Build the class hierarchy with the selected grouping method."""
        pipeline = self.config.pipeline
        context = GroupingContext(
            dataset=dataset,
            model=model,
            train_split=pipeline.train_split,
            val_split=pipeline.val_split,
            normalize_features=pipeline.normalize_features,
            descriptor_file=pipeline.descriptor_file,
            taxonomy_file=pipeline.taxonomy_file,
        )
        if self.debug:
            print(f"Checking usability of {self.grouping.NAME}...")
        if not self.grouping.is_usable(context):
            raise ValueError(f"Grouping method {self.grouping.NAME} cannot run with the given model, data and files")
        counts = tuple(group_counts) if group_counts is not None else pipeline.group_counts
        tree = self.grouping.build(context, counts, self.config.train.seed if seed is None else seed)
        if self.debug:
            print(f"Built hierarchy with group counts {list(tree.group_counts)}")
        return tree

    def train_hierarchy(
        self,
        tree: HierarchyTree,
        dataset: Dataset,
        base: MlpModel,
        thresholds: Optional[Sequence[Optional[float]]] = None,
        strategy: Optional[Sequence[int]] = None,
    ) -> CascadeEnsemble:
        """Thresholds default to calibration on the validation split (``None`` per level)."""
        levels = thresholds if thresholds is not None else [None] * (tree.num_levels - 1)
        path = StrategyPath(tuple(strategy) if strategy is not None else self._default_strategy(tree))
        return train_hierarchy(tree, dataset, base, levels, path, self.config, executor=self.executor, debug=self.debug)

    def _default_strategy(self, tree: HierarchyTree) -> tuple[int, ...]:
        """Configured strategy, cut to the levels the tree has."""
        path = tuple(level for level in self.config.pipeline.strategy if level <= tree.num_levels)
        return path if len(path) > 1 else (0, 1)

    def calibrate(self, ensemble: CascadeEnsemble, dataset: Dataset) -> CascadeEnsemble:
        validation = dataset.split(self.config.pipeline.val_split)
        thresholds = calibrate_thresholds(ensemble, validation, self.config.pipeline.recall_target)
        if self.debug:
            print(f"Calibrated thresholds: {[format_float(threshold) for threshold in thresholds]}")
        return ensemble.with_thresholds(thresholds)

    def infer(self, ensemble: CascadeEnsemble, data: Dataset) -> tuple[np.ndarray, CostStats]:
        scores, cost = cascade_batch(ensemble, data, executor=self.executor)
        if self.debug:
            print(f"Scored {cost.num_samples} samples with {cost.total_evaluations} node evaluations")
        return scores, cost

    def evaluate(
        self,
        dataset: Dataset,
        scores: np.ndarray,
        cost: Optional[CostStats] = None,
        ensemble: Optional[CascadeEnsemble] = None,
        command: str = "eval",
        tail_counts: Optional[Mapping[int, int]] = None,
    ) -> EvalReport:
        """mAP of ``scores`` (rows: evaluation split, columns: classes 1..C) plus the tail-half mAP.

        The tail half is taken from ``tail_counts``, by default the per-class counts of the training split.
        """
        pipeline = self.config.pipeline
        evaluation = dataset.split(pipeline.eval_split)
        classes = dataset.class_ids
        overall, per_class = mean_ap(scores, evaluation.labels, classes, ids=evaluation.ids, skip_missing=True)
        counts = tail_counts if tail_counts is not None else dataset.split(pipeline.train_split).class_counts()
        tail = tail_classes(counts)
        report = EvalReport(
            command=command,
            per_class_ap=per_class,
            mean_ap=overall,
            tail_map=subset_map(per_class, tail) if any(c in per_class for c in tail) else None,
            cost_stats=cost,
            seeds=[self.config.train.seed],
            config_snapshot=self.config.snapshot(),
        )
        if ensemble is not None:
            report.thresholds = [format_float(threshold) for threshold in ensemble.thresholds]
            if ensemble.num_levels > 1:
                recall = gate_recall(ensemble, dataset.split(pipeline.val_split))
                report.gate_recall = {f"{l}_{j}": value for (l, j), value in recall.items()}
        return report

    def run(
        self,
        dataset: Dataset,
        base: Optional[MlpModel] = None,
        tree: Optional[HierarchyTree] = None,
        strategy: Optional[Sequence[int]] = None,
        tail_counts: Optional[Mapping[int, int]] = None,
    ) -> PipelineResult:
        """Full pipeline on one dataset; a given base model or tree skips its stage."""
        base = base if base is not None else self.pretrain(dataset)
        tree = tree if tree is not None else self.cluster(dataset, base)
        ensemble = self.train_hierarchy(tree, dataset, base, strategy=strategy)
        evaluation = dataset.split(self.config.pipeline.eval_split)
        scores, cost = self.infer(ensemble, evaluation)
        report = self.evaluate(dataset, scores, cost, ensemble, command="pipeline", tail_counts=tail_counts)
        return PipelineResult(base, tree, ensemble, report, scores)

    def with_config(self, config: RunConfig) -> Orchestrator:
        """Same method and executor, different configuration."""
        return Orchestrator(config, self.debug, grouping_method=self.grouping.NAME, executor=self.executor)


def replace_pipeline(config: RunConfig, **changes: object) -> RunConfig:
    return dataclasses.replace(config, pipeline=dataclasses.replace(config.pipeline, **changes))


def replace_train(config: RunConfig, **changes: object) -> RunConfig:
    return dataclasses.replace(config, train=dataclasses.replace(config.train, **changes))
