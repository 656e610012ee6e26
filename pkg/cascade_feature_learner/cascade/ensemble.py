"""The deployable cascade: one MLP, one SVM bank per hierarchy node, one threshold per non-leaf level."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..core.dataset import format_float
from ..grouping.hierarchy import HierarchyTree, Node
from ..models.mlp import MlpModel, extract_features, forward, load_mlp, save_mlp
from ..models.svm import SvmBank, load_svm, save_svm, svm_scores

ENSEMBLE_TAG = "CASCADE1"
MANIFEST_FILE = "manifest.json"
GATE_MODES = ("svm", "softmax")


@dataclass
class NodeModel:
    """Model and SVM bank of one node; both score exactly the node's group."""

    model: MlpModel
    svm: SvmBank

    def svm_scores(self, features: np.ndarray, normalize: bool = True) -> np.ndarray:
        return svm_scores(self.svm, extract_features(self.model, features, normalize=normalize))

    def gate_scores(self, features: np.ndarray, gate_mode: str = "svm", normalize: bool = True) -> np.ndarray:
        """Per-class scores used by the gates below this node: SVM scores, or softmax probabilities."""
        if gate_mode == "svm":
            return self.svm_scores(features, normalize)
        if gate_mode == "softmax":
            logits, _ = forward(self.model, np.atleast_2d(features))
            shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
            return (shifted / shifted.sum(axis=1, keepdims=True))[:, 1:]
        raise ValueError(f"Unknown gate mode: {gate_mode}. Available: {', '.join(GATE_MODES)}")


def group_columns(parent_classes: Sequence[int], child_group: Sequence[int]) -> np.ndarray:
    """Column positions of ``child_group`` inside a node's class set."""
    position = {class_id: k for k, class_id in enumerate(parent_classes)}
    missing = [class_id for class_id in child_group if class_id not in position]
    if missing:
        raise ValueError(f"node does not score class(es) {missing}")
    return np.array([position[class_id] for class_id in child_group], dtype=np.int64)


@dataclass
class CascadeEnsemble:
    tree: HierarchyTree
    nodes: dict[Node, NodeModel]
    thresholds: list[float]
    strategy: tuple[int, ...] = (0, 1)
    seeds: dict[Node, int] = field(default_factory=dict)
    gate_mode: str = "svm"
    normalize_features: bool = True

    def __post_init__(self) -> None:
        expected = set(self.tree.nodes())
        if set(self.nodes) != expected:
            missing = sorted(expected - set(self.nodes))
            extra = sorted(set(self.nodes) - expected)
            raise ValueError(f"ensemble nodes do not match the tree (missing {missing}, unexpected {extra})")
        for (l, j), node in self.nodes.items():
            group = self.tree.group(l, j)
            if node.model.class_set != group or node.svm.class_set != group:
                raise ValueError(f"node ({l}, {j}) does not score exactly its group {list(group)}")
        if len(self.thresholds) != self.tree.num_levels - 1:
            raise ValueError(f"expected {self.tree.num_levels - 1} thresholds, got {len(self.thresholds)}")
        if self.gate_mode not in GATE_MODES:
            raise ValueError(f"Unknown gate mode: {self.gate_mode}. Available: {', '.join(GATE_MODES)}")
        self.thresholds = [float(threshold) for threshold in self.thresholds]

    @property
    def num_levels(self) -> int:
        return self.tree.num_levels

    @property
    def input_dim(self) -> int:
        return self.nodes[(1, 1)].model.input_dim

    def node(self, l: int, j: int) -> NodeModel:
        return self.nodes[(l, j)]

    def with_thresholds(self, thresholds: Sequence[float]) -> CascadeEnsemble:
        return CascadeEnsemble(
            self.tree,
            self.nodes,
            list(thresholds),
            self.strategy,
            self.seeds,
            self.gate_mode,
            self.normalize_features,
        )


def _node_stem(node: Node) -> str:
    return f"node_{node[0]}_{node[1]}"


def save_ensemble(ensemble: CascadeEnsemble, directory: str) -> None:
    """Write ``manifest.json`` plus ``node_<l>_<j>.mlp`` / ``node_<l>_<j>.svm`` for every node."""
    os.makedirs(directory, exist_ok=True)
    for node, parts in ensemble.nodes.items():
        save_mlp(parts.model, os.path.join(directory, _node_stem(node) + ".mlp"))
        save_svm(parts.svm, os.path.join(directory, _node_stem(node) + ".svm"))
    manifest = {
        "format": ENSEMBLE_TAG,
        "group_counts": list(ensemble.tree.group_counts),
        "groups": ensemble.tree.to_lines(),
        "thresholds": [format_float(threshold) for threshold in ensemble.thresholds],
        "strategy": list(ensemble.strategy),
        "seeds": {f"{l}_{j}": seed for (l, j), seed in sorted(ensemble.seeds.items())},
        "gate_mode": ensemble.gate_mode,
        "normalize_features": ensemble.normalize_features,
        "nodes": [_node_stem(node) for node in ensemble.tree.nodes()],
    }
    with open(os.path.join(directory, MANIFEST_FILE), "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _tree_from_lines(lines: Sequence[str]) -> HierarchyTree:
    levels: dict[int, list[list[int]]] = {}
    for line in lines:
        head, _, body = line.partition(":")
        l = int(head.split()[0])
        levels.setdefault(l, []).append([int(token) for token in body.split()])
    return HierarchyTree([levels[l] for l in sorted(levels)])


def load_ensemble(directory: str, thresholds: Optional[Sequence[float]] = None) -> CascadeEnsemble:
    """Read an ensemble directory; ``thresholds`` replaces the stored ones when given."""
    manifest_path = os.path.join(directory, MANIFEST_FILE)
    try:
        with open(manifest_path, "r", encoding="utf-8") as handle:
            manifest = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValueError(f"Invalid manifest {manifest_path}: {exc}") from exc
    if manifest.get("format") != ENSEMBLE_TAG:
        raise ValueError(f"{manifest_path} is not a {ENSEMBLE_TAG} manifest")

    try:
        tree = _tree_from_lines(manifest["groups"])
        stored = [float(value) for value in manifest["thresholds"]]
        seeds = {
            (int(key.split("_")[0]), int(key.split("_")[1])): int(seed) for key, seed in manifest["seeds"].items()
        }
    except (KeyError, ValueError, IndexError) as exc:
        raise ValueError(f"Invalid manifest {manifest_path}: {exc}") from exc

    nodes = {
        node: NodeModel(
            load_mlp(os.path.join(directory, _node_stem(node) + ".mlp")),
            load_svm(os.path.join(directory, _node_stem(node) + ".svm")),
        )
        for node in tree.nodes()
    }
    return CascadeEnsemble(
        tree=tree,
        nodes=nodes,
        thresholds=list(thresholds) if thresholds is not None else stored,
        strategy=tuple(manifest.get("strategy", (0, 1))),
        seeds=seeds,
        gate_mode=manifest.get("gate_mode", "svm"),
        normalize_features=bool(manifest.get("normalize_features", True)),
    )
