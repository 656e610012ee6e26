"""Experiment sweeps: one family, a grid of conditions, several seeds, the full pipeline per point.

A grid point that cannot run (an infeasible ratio, a group without data) is recorded with its error and the sweep
moves on.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from ..cascade.hier_train import StrategyPath, node_seed
from ..core.config import RunConfig
from ..core.dataset import BACKGROUND, Dataset, load_dataset
from ..core.interfaces import TaskExecutor
from ..core.orchestrator import Orchestrator, replace_train
from ..datagen.synthetic import generate_synthetic, load_truth
from ..executors import create_executor
from ..grouping.hierarchy import HierarchyTree, planted_recovery
from ..models.mlp import MlpModel, extract_features, freeze_lower, softmax_accuracy_per_class, spawn_child, train
from ..models.svm import svm_scores, train_ovr_svm
from ..sampling.subsets import SampleSubset, class_subset, nmax_for_ratio, pseudo_uniform, rand_all, rand_pos
from .report import EvalReport, SweepRow, SweepTable

FAMILIES = (
    "sampling",
    "uniform-batches",
    "freeze",
    "class-subset",
    "clustering",
    "level-sweep",
    "strategy",
    "split-role",
)


@dataclass
class ExperimentSpec:
    """A sweep family, its grid and seeds; synthetic data is generated per seed unless a dataset is given."""

    family: str
    grid: tuple[str, ...] = ()
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    config: RunConfig = field(default_factory=RunConfig)
    dataset_path: Optional[str] = None
    truth_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"Unknown experiment family: {self.family}. Available: {', '.join(FAMILIES)}")
        if not self.seeds:
            raise ValueError("an experiment needs at least one seed")
        if not self.grid:
            self.grid = default_grid(self.family, self.config)


def default_grid(family: str, config: RunConfig) -> tuple[str, ...]:
    ratios = ("0.5", "0.25", "0.125", "0.0625", "0.03125")
    grids: dict[str, tuple[str, ...]] = {
        "sampling": ("none",)
        + tuple(f"{scheme}:{r}" for scheme in ("rand_pos", "rand_all", "pseudo_uniform") for r in ratios),
        "uniform-batches": ("plain", "uniform"),
        "freeze": tuple(str(k) for k in range(len(config.train.hidden_dims) + 2)),
        "class-subset": ("all", "count-largest:10", "count-smallest:10", "accuracy-largest:10", "accuracy-smallest:10"),
        "clustering": ("visual", "confusion", "accuracy", "count", "random"),
        "level-sweep": ("1", "1,4", "1,4,7", "1,4,7,18"),
        "strategy": ("0,1", "0,2", "0,1,2"),
        "split-role": (
            "pos=train;neg=train",
            "pos=train,pretrain;neg=train",
            "pos=train;neg=train,pretrain",
            "pos=pretrain;neg=pretrain",
        ),
    }
    return grids[family]


@dataclass
class PointResult:
    mean_ap: float
    tail_map: Optional[float]
    stats: dict[str, Any] = field(default_factory=dict)


@dataclass
class SeedContext:
    """State shared by every grid point of one seed."""

    seed: int
    config: RunConfig
    dataset: Dataset
    base: MlpModel
    orchestrator: Orchestrator
    truth: Optional[dict[int, int]]
    tail_counts: dict[int, int]
    trees: dict[tuple[str, tuple[int, ...]], HierarchyTree] = field(default_factory=dict)

    def tree(self, method: str, group_counts: tuple[int, ...]) -> HierarchyTree:
        key = (method, group_counts)
        if key not in self.trees:
            orchestrator = self.orchestrator
            if method != orchestrator.grouping.NAME:
                orchestrator = Orchestrator(
                    self.config, orchestrator.debug, grouping_method=method, executor=orchestrator.executor
                )
            self.trees[key] = orchestrator.cluster(self.dataset, self.base, group_counts, seed=self.seed)
        return self.trees[key]

    @property
    def flat_tree(self) -> HierarchyTree:
        return HierarchyTree([[self.dataset.class_ids]])


def _pipeline_point(
    context: SeedContext,
    tree: HierarchyTree,
    base: Optional[MlpModel] = None,
    config: Optional[RunConfig] = None,
    strategy: Optional[tuple[int, ...]] = None,
) -> tuple[PointResult, Any]:
    orchestrator = context.orchestrator if config is None else context.orchestrator.with_config(config)
    result = orchestrator.run(
        context.dataset,
        base=base if base is not None else context.base,
        tree=tree,
        strategy=strategy,
        tail_counts=context.tail_counts,
    )
    report = result.report
    assert report.mean_ap is not None
    return PointResult(report.mean_ap, report.tail_map), result


def _feature_model_point(context: SeedContext, model: MlpModel) -> PointResult:
    """SVMs for every class on the standard training split, over the features of ``model``."""
    pipeline = context.config.pipeline
    normalize = pipeline.normalize_features
    training = context.dataset.split(pipeline.train_split)
    evaluation = context.dataset.split(pipeline.eval_split)
    bank = train_ovr_svm(
        extract_features(model, training.features, normalize=normalize),
        training.labels,
        context.dataset.class_ids,
        context.config.svm,
    )
    scores = svm_scores(bank, extract_features(model, evaluation.features, normalize=normalize))
    report = context.orchestrator.evaluate(
        context.dataset, scores, command="experiment", tail_counts=context.tail_counts
    )
    assert report.mean_ap is not None
    return PointResult(report.mean_ap, report.tail_map)


def _finetune(context: SeedContext, data: Dataset, classes: tuple[int, ...]) -> MlpModel:
    start = spawn_child(context.base, classes, node_seed(context.config.train.seed, 1, 1))
    model, _ = train(start, data, context.config.train)
    return model


def _sampling(entry: str, context: SeedContext) -> PointResult:
    pipeline = context.config.pipeline
    training = context.dataset.split(pipeline.train_split)
    classes = context.dataset.class_ids
    if entry == "none":
        result = _feature_model_point(context, _finetune(context, training, classes))
        result.stats = {"realized_ratio": 1.0}
        return result

    scheme, _, ratio_text = entry.partition(":")
    ratio = float(ratio_text)
    subset: SampleSubset
    stats: dict[str, Any] = {}
    if scheme == "rand_pos":
        subset = rand_pos(training, ratio, context.seed)
    elif scheme == "rand_all":
        subset = rand_all(training, ratio, context.seed)
    elif scheme == "pseudo_uniform":
        n_max = nmax_for_ratio(training.class_counts(), ratio)
        subset = pseudo_uniform(training, n_max, context.seed)
        stats["n_max"] = n_max
    else:
        raise ValueError(f"Unknown sampling scheme '{scheme}' (expected rand_pos, rand_all or pseudo_uniform)")

    # only the finetuning rows are subsampled; the SVMs still see the whole training split
    result = _feature_model_point(context, _finetune(context, training.subset(np.sort(subset.indices)), classes))
    stats["realized_ratio"] = subset.realized_ratio
    stats["kept_positives"] = int(training.positive_mask[subset.indices].sum())
    result.stats = stats
    return result


def _uniform_batches(entry: str, context: SeedContext) -> PointResult:
    result, _ = _pipeline_point(context, context.flat_tree, config=replace_train(context.config, batch_source=entry))
    return result


def _freeze(entry: str, context: SeedContext) -> PointResult:
    frozen = int(entry)
    result, _ = _pipeline_point(context, context.flat_tree, base=freeze_lower(context.base, frozen))
    result.stats = {"frozen_layers": frozen, "trainable_layers": context.base.num_layers - frozen}
    return result


def _class_subset(entry: str, context: SeedContext) -> PointResult:
    pipeline = context.config.pipeline
    training = context.dataset.split(pipeline.train_split)
    if entry == "all":
        chosen = context.dataset.class_ids
    else:
        selector, _, count_text = entry.partition(":")
        descriptor_name, _, direction = selector.partition("-")
        count = int(count_text)
        if descriptor_name == "count":
            descriptor = {class_id: float(value) for class_id, value in training.class_counts().items()}
        elif descriptor_name == "accuracy":
            descriptor = softmax_accuracy_per_class(context.base, training)
        else:
            raise ValueError(f"Unknown class selector '{descriptor_name}' (expected count or accuracy)")
        if direction not in ("largest", "smallest"):
            raise ValueError(f"Unknown selection direction '{direction}' (expected largest or smallest)")
        if not 1 <= count <= len(descriptor):
            raise ValueError(f"class count must be in [1, {len(descriptor)}], got {count}")
        sign = -1.0 if direction == "largest" else 1.0
        ordered = sorted(descriptor, key=lambda class_id: (sign * descriptor[class_id], class_id))
        chosen = tuple(sorted(ordered[:count]))

    data = class_subset(training, chosen).to_dataset()
    result = _feature_model_point(context, _finetune(context, data, tuple(chosen)))
    total = int(training.positive_mask.sum())
    result.stats = {
        "classes_used": len(chosen),
        "positive_number_ratio": int(data.positive_mask.sum()) / total if total else 0.0,
    }
    return result


def _clustering(entry: str, context: SeedContext) -> PointResult:
    tree = context.tree(entry, context.config.pipeline.group_counts)
    result, _ = _pipeline_point(context, tree)
    stats: dict[str, Any] = {"group_sizes": " ".join(str(size) for size in tree.group_sizes(tree.num_levels))}
    if context.truth is not None:
        stats["planted_recovered"] = 1.0 if planted_recovery(tree, context.truth) else 0.0
    result.stats = stats
    return result


def _level_sweep(entry: str, context: SeedContext) -> PointResult:
    counts = tuple(int(part) for part in entry.split(",") if part.strip())
    tree = context.tree(context.orchestrator.grouping.NAME, counts)
    result, pipeline_result = _pipeline_point(context, tree)
    cost = pipeline_result.report.cost_stats
    stats: dict[str, Any] = {"levels": tree.num_levels, "total_evaluations": cost.total_evaluations}
    for l in range(1, tree.num_levels + 1):
        stats[f"avg_classes_per_group_l{l}"] = len(tree.classes) / tree.group_counts[l - 1]
        stats[f"n_b_l{l}"] = cost.n_b(l)
        stats[f"n_b_times_n_m_l{l}"] = cost.n_b(l) * cost.n_m(l)
    result.stats = stats
    return result


def _strategy(entry: str, context: SeedContext) -> PointResult:
    path = StrategyPath.parse(entry)
    counts = context.config.pipeline.group_counts
    if path.deepest > len(counts):
        raise ValueError(f"strategy {path} needs {path.deepest} levels but group_counts has {len(counts)}")
    tree = context.tree(context.orchestrator.grouping.NAME, tuple(counts)).truncate(path.deepest)
    result, _ = _pipeline_point(context, tree, strategy=path.levels)
    result.stats = {"levels": tree.num_levels}
    return result


def parse_split_role(entry: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """``pos=<splits>;neg=<splits>`` with comma-separated split names."""
    roles: dict[str, tuple[str, ...]] = {}
    for part in entry.split(";"):
        key, separator, value = part.partition("=")
        if not separator or key.strip() not in ("pos", "neg"):
            raise ValueError(f"Invalid split-role entry '{entry}': expected pos=<splits>;neg=<splits>")
        roles[key.strip()] = tuple(name.strip() for name in value.split(",") if name.strip())
    if set(roles) != {"pos", "neg"}:
        raise ValueError(f"Invalid split-role entry '{entry}': both pos and neg are required")
    return roles["pos"], roles["neg"]


def _split_role(entry: str, context: SeedContext) -> PointResult:
    positive_splits, negative_splits = parse_split_role(entry)
    dataset = context.dataset
    rows = np.flatnonzero(
        (np.isin(dataset.splits, positive_splits) & dataset.positive_mask)
        | (np.isin(dataset.splits, negative_splits) & (dataset.labels == BACKGROUND))
    )
    data = dataset.subset(rows)
    if not data.positive_mask.any():
        raise ValueError(f"splits {list(positive_splits)} hold no positives")
    result = _feature_model_point(context, _finetune(context, data, dataset.class_ids))
    result.stats = {
        "finetune_positives": int(data.positive_mask.sum()),
        "finetune_negatives": int((data.labels == BACKGROUND).sum()),
    }
    return result


RUNNERS: dict[str, Callable[[str, SeedContext], PointResult]] = {
    "sampling": _sampling,
    "uniform-batches": _uniform_batches,
    "freeze": _freeze,
    "class-subset": _class_subset,
    "clustering": _clustering,
    "level-sweep": _level_sweep,
    "strategy": _strategy,
    "split-role": _split_role,
}


def _condition(family: str, entry: str) -> dict[str, str]:
    keys = {
        "sampling": "scheme",
        "uniform-batches": "batch_source",
        "freeze": "frozen_layers",
        "class-subset": "classes",
        "clustering": "method",
        "level-sweep": "group_counts",
        "strategy": "strategy",
        "split-role": "roles",
    }
    return {"family": family, keys[family]: entry}


def _merge_stats(per_seed: list[dict[str, Any]]) -> dict[str, Any]:
    merged: dict[str, Any] = {}
    for key in sorted({key for stats in per_seed for key in stats}):
        values = [stats[key] for stats in per_seed if key in stats]
        if all(isinstance(value, (int, float)) for value in values):
            merged[key] = float(np.mean(values))
        else:
            merged[key] = "|".join(dict.fromkeys(str(value) for value in values))
    return merged


def _load_seed_data(spec: ExperimentSpec, config: RunConfig) -> tuple[Dataset, Optional[dict[int, int]]]:
    if spec.dataset_path is not None:
        truth = load_truth(spec.truth_path) if spec.truth_path is not None else None
        return load_dataset(spec.dataset_path), truth
    generated = generate_synthetic(config.gen)
    return generated.dataset, generated.class_to_group


def run_experiment(
    spec: ExperimentSpec,
    debug: bool = False,
    deterministic: bool = True,
    executor: Optional[TaskExecutor] = None,
) -> EvalReport:
    """Run every grid point of ``spec`` with every seed and tabulate mAP (mean, min, max over seeds)."""
    executor = executor or create_executor(deterministic, debug=debug)
    runner = RUNNERS[spec.family]
    rows = [SweepRow(condition=_condition(spec.family, entry)) for entry in spec.grid]
    stats: list[list[dict[str, Any]]] = [[] for _ in spec.grid]

    for seed in spec.seeds:
        config = spec.config.with_seed(seed)
        dataset, truth = _load_seed_data(spec, config)
        orchestrator = Orchestrator(config, debug=debug, executor=executor)
        if debug:
            print(f"Seed {seed}: {dataset!r}")
        try:
            base = orchestrator.pretrain(dataset)
        except (ValueError, RuntimeError) as exc:
            print(f"Warning: seed {seed} could not pretrain: {exc}", file=sys.stderr)
            for row in rows:
                row.errors[seed] = f"pretraining failed: {exc}"
            continue
        context = SeedContext(
            seed=seed,
            config=config,
            dataset=dataset,
            base=base,
            orchestrator=orchestrator,
            truth=truth,
            tail_counts=dataset.split(config.pipeline.train_split).class_counts(),
        )

        for k, entry in enumerate(spec.grid):
            if debug:
                print(f"Seed {seed}, {spec.family} = {entry}")
            try:
                point = runner(entry, context)
            except (ValueError, RuntimeError) as exc:
                print(f"Warning: {spec.family} point '{entry}' failed for seed {seed}: {exc}", file=sys.stderr)
                rows[k].errors[seed] = str(exc)
                continue
            rows[k].per_seed[seed] = point.mean_ap
            if point.tail_map is not None:
                rows[k].tail_per_seed[seed] = point.tail_map
            stats[k].append(point.stats)

    for row, row_stats in zip(rows, stats):
        row.stats = _merge_stats(row_stats)

    return EvalReport(
        command=f"experiment {spec.family}",
        sweeps=[SweepTable(spec.family, rows)],
        seeds=list(spec.seeds),
        config_snapshot=spec.config.snapshot(),
    )
