"""Parent-initialized training of one model per hierarchy node, with negatives mined through the parent gates."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core.config import RunConfig, TrainConfig
from ..core.dataset import BACKGROUND, Dataset
from ..core.interfaces import TaskExecutor
from ..executors import SerialExecutor
from ..grouping.hierarchy import HierarchyTree, Node
from ..models.mlp import MlpModel, default_layer_dims, extract_features, init_mlp, spawn_child, train
from ..models.svm import train_ovr_svm
from ..sampling.batches import UniformBatchSource, create_batch_source
from ..sampling.subsets import round_half_up
from .ensemble import CascadeEnsemble, NodeModel, group_columns
from .inference import calibrate_level


@dataclass(frozen=True)
class StrategyPath:
    """Levels through which models are successively finetuned; 0 is the pretrained base."""

    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        levels = tuple(int(level) for level in self.levels)
        if not levels or levels[0] != 0:
            raise ValueError(f"strategy must start at 0, got {list(levels)}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"strategy levels must be strictly increasing, got {list(levels)}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def parse(cls, text: str) -> StrategyPath:
        """Accepts ``0,1,2`` or ``0>1>2``."""
        try:
            return cls(tuple(int(part) for part in text.replace(">", ",").split(",") if part.strip()))
        except ValueError as exc:
            raise ValueError(f"Invalid strategy '{text}': {exc}") from exc

    @property
    def deepest(self) -> int:
        return self.levels[-1]

    def source_level(self, level: int) -> int:
        """Level whose model a node at ``level`` is spawned from: the deepest path level above it."""
        return max(path_level for path_level in self.levels if path_level < level)

    def __str__(self) -> str:
        return ">".join(str(level) for level in self.levels)


@dataclass
class NodeTrainState:
    """Training inputs and outputs of one node; positions index the training split."""

    node: Node
    positives: np.ndarray
    negatives: np.ndarray
    reached: np.ndarray
    node_model: NodeModel
    threshold: Optional[float]
    mining_scores: Optional[np.ndarray]
    floor_engaged: bool
    epochs: int
    seed: int

    def verify(self, tree: HierarchyTree, training: Dataset, parent: Optional[NodeTrainState]) -> list[str]:
        """Violated training invariants, as messages (empty when all hold)."""
        problems = []
        group = set(tree.group(*self.node))
        if not set(training.labels[self.positives].tolist()) <= group:
            problems.append(f"node {self.node}: a positive carries a label outside its group")
        if np.any(training.labels[self.negatives] != BACKGROUND):
            problems.append(f"node {self.node}: a negative is not background")
        if parent is not None:
            if not set(self.negatives.tolist()) <= set(parent.negatives.tolist()):
                problems.append(f"node {self.node}: negatives are not a subset of the parent's negatives")
            if not self.floor_engaged and self.mining_scores is not None and self.threshold is not None:
                if np.any(self.mining_scores <= self.threshold):
                    problems.append(f"node {self.node}: a mined negative scores <= T = {self.threshold}")
        return problems


def node_seed(seed: int, level: int, group: int) -> int:
    return int(np.random.SeedSequence([seed, level, group]).generate_state(1)[0])


def pretrain_base(pretrain: Dataset, config: TrainConfig, debug: bool = False) -> MlpModel:
    """Base model over every positive class of the dataset, trained on the pretrain split.

    Raises:
        ValueError: if the split is empty
    """
    if len(pretrain) == 0:
        raise ValueError("pretrain split is empty")
    layer_dims = default_layer_dims(pretrain.dim, pretrain.num_classes, config.hidden_dims)
    model = init_mlp(layer_dims, pretrain.class_ids, config.seed, init_scale=config.init_scale)
    if config.epochs == 0:
        return model
    trained, trace = train(model, pretrain, config, debug=debug)
    if debug and trace:
        print(f"Pretrained base: final loss {trace[-1]:.6f}")
    return trained


def mine_negatives(gate_values: np.ndarray, threshold: float) -> np.ndarray:
    """Positions whose parent gate value (max over the child group) exceeds ``threshold``."""
    return np.flatnonzero(np.asarray(gate_values) > threshold)


def mine_with_parent(
    parent: NodeModel,
    parent_group: Sequence[int],
    candidates: Dataset,
    child_group: Sequence[int],
    threshold: float,
    gate_mode: str = "svm",
    normalize: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Mined positions into ``candidates`` and every candidate's gate value."""
    if len(candidates) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    gate = parent.gate_scores(candidates.features, gate_mode, normalize)
    values = gate[:, group_columns(parent_group, child_group)].max(axis=1)
    return mine_negatives(values, threshold), values


def node_epochs(epochs: int, node_positives: int, total_positives: int, minimum: int) -> int:
    return max(minimum, round_half_up(epochs * node_positives / max(total_positives, 1)))


class HierarchicalTrainer:
    """Trains every node of a tree level by level; nodes of one level run through the executor."""

    def __init__(self, config: RunConfig, executor: Optional[TaskExecutor] = None, debug: bool = False):
        config.validate()
        self.config = config
        self.executor = executor or SerialExecutor(debug=debug)
        self.debug = debug
        self.states: dict[Node, NodeTrainState] = {}

    def train(
        self,
        tree: HierarchyTree,
        dataset: Dataset,
        base: MlpModel,
        thresholds: Sequence[Optional[float]],
        strategy: StrategyPath,
    ) -> CascadeEnsemble:
        """Train the ensemble; ``None`` thresholds are calibrated on the validation split as soon as their level
        is trained.

        Raises:
            ValueError: if a node has no training positives or the strategy reaches below the tree
            RuntimeError: if a trained node violates its training invariants
        """
        pipeline = self.config.pipeline
        if len(thresholds) != tree.num_levels - 1:
            raise ValueError(f"expected {tree.num_levels - 1} thresholds, got {len(thresholds)}")
        if strategy.deepest > tree.num_levels:
            raise ValueError(f"strategy {strategy} reaches level {strategy.deepest} but the tree has {tree.num_levels}")
        missing = sorted(set(tree.classes) - set(base.class_set))
        if missing:
            raise ValueError(f"base model does not score class(es) {missing}")

        training = dataset.split(pipeline.train_split)
        validation: Optional[Dataset] = None
        total_positives = int(training.positive_mask.sum())
        resolved: list[float] = []
        self.states = {}

        for level in range(1, tree.num_levels + 1):
            if level > 1 and thresholds[level - 2] is None:
                if validation is None:
                    validation = dataset.split(pipeline.val_split)
                nodes = {node: self.states[node].node_model for node in tree.nodes(level - 1)}
                resolved.append(
                    calibrate_level(
                        tree,
                        nodes,
                        level - 1,
                        validation,
                        pipeline.recall_target,
                        pipeline.gate_mode,
                        pipeline.normalize_features,
                    )
                )
                if self.debug:
                    print(f"Calibrated T_{level - 1} = {resolved[-1]!r} (recall target {pipeline.recall_target})")
            elif level > 1:
                resolved.append(float(thresholds[level - 2]))  # type: ignore[arg-type]

            threshold = resolved[level - 2] if level > 1 else None
            source = strategy.source_level(level)
            jobs = list(tree.nodes(level))
            if self.debug:
                print(f"Training level {level}: {len(jobs)} node(s), spawned from level {source}")

            def run(node: Node) -> NodeTrainState:
                return self._train_node(tree, training, base, node, source, threshold, total_positives)

            for state in self.executor.map(run, jobs):
                self.states[state.node] = state

        problems = []
        for node, state in self.states.items():
            parent = self.states[(node[0] - 1, tree.parent(*node))] if node[0] > 1 else None
            problems.extend(state.verify(tree, training, parent))
        if problems:
            raise RuntimeError("hierarchical training violated its invariants: " + "; ".join(problems))

        return CascadeEnsemble(
            tree=tree,
            nodes={node: state.node_model for node, state in self.states.items()},
            thresholds=resolved,
            strategy=strategy.levels,
            seeds={node: state.seed for node, state in self.states.items()},
            gate_mode=pipeline.gate_mode,
            normalize_features=pipeline.normalize_features,
        )

    def _train_node(
        self,
        tree: HierarchyTree,
        training: Dataset,
        base: MlpModel,
        node: Node,
        source: int,
        threshold: Optional[float],
        total_positives: int,
    ) -> NodeTrainState:
        pipeline = self.config.pipeline
        level, j = node
        group = tree.group(level, j)
        seed = node_seed(self.config.train.seed, level, j)
        positives = np.flatnonzero(np.isin(training.labels, group))
        if len(positives) == 0:
            raise ValueError(f"node ({level}, {j}) has no training positives for group {list(group)}")

        mining_scores = None
        floor_engaged = False
        if level == 1:
            reached = np.arange(len(training))
            negatives = np.flatnonzero(training.labels == BACKGROUND)
        else:
            parent_j = tree.parent(level, j)
            parent = self.states[(level - 1, parent_j)]
            assert threshold is not None
            candidates = training.subset(parent.reached)
            kept, values = mine_with_parent(
                parent.node_model,
                tree.group(level - 1, parent_j),
                candidates,
                group,
                threshold,
                pipeline.gate_mode,
                pipeline.normalize_features,
            )
            reached = parent.reached[kept]
            negatives = reached[training.labels[reached] == BACKGROUND]
            mining_scores = values[kept][training.labels[reached] == BACKGROUND]
            if len(negatives) == 0:
                floor_engaged = True
                background = training.labels[parent.reached] == BACKGROUND
                order = np.argsort(-values[background], kind="stable")[: pipeline.negative_floor]
                negatives = np.sort(parent.reached[background][order])
                mining_scores = values[background][order]
                reached = np.union1d(reached, negatives)
                print(
                    f"Warning: T = {threshold!r} rejects every negative of node ({level}, {j}); "
                    f"training on the {len(negatives)} highest-scoring parent negatives",
                    file=sys.stderr,
                )

        if source == 0:
            start = spawn_child(base, group, seed)
        else:
            source_state = self.states[(source, tree.ancestor(level, j, source))]
            start = spawn_child(source_state.node_model.model, group, seed)
        epochs = node_epochs(self.config.train.epochs, len(positives), total_positives, pipeline.min_node_epochs)
        node_config = dataclasses.replace(self.config.train, epochs=epochs, seed=seed)
        batch_source = (
            UniformBatchSource(node_config.pos_fraction, class_ids=group)
            if node_config.batch_source == UniformBatchSource.NAME
            else create_batch_source(node_config.batch_source, node_config.pos_fraction)
        )
        members = np.union1d(positives, negatives)
        model, trace = train(start, training.subset(members), node_config, batch_source=batch_source)

        svm_rows = np.union1d(positives, reached)
        features = extract_features(model, training.features[svm_rows], normalize=pipeline.normalize_features)
        bank = train_ovr_svm(features, training.labels[svm_rows], group, self.config.svm)
        if self.debug:
            final = f"{trace[-1]:.6f}" if trace else "n/a"
            print(
                f"Node ({level}, {j}): {len(group)} classes, {len(positives)} positives, {len(negatives)} negatives, "
                f"{epochs} epochs, final loss {final}"
            )
        return NodeTrainState(
            node=node,
            positives=positives,
            negatives=negatives,
            reached=reached,
            node_model=NodeModel(model, bank),
            threshold=threshold,
            mining_scores=mining_scores,
            floor_engaged=floor_engaged,
            epochs=epochs,
            seed=seed,
        )


def train_hierarchy(
    tree: HierarchyTree,
    dataset: Dataset,
    base: MlpModel,
    thresholds: Sequence[Optional[float]],
    strategy: StrategyPath | Sequence[int],
    config: RunConfig,
    executor: Optional[TaskExecutor] = None,
    debug: bool = False,
) -> CascadeEnsemble:
    path = strategy if isinstance(strategy, StrategyPath) else StrategyPath(tuple(strategy))
    return HierarchicalTrainer(config, executor=executor, debug=debug).train(tree, dataset, base, thresholds, path)
