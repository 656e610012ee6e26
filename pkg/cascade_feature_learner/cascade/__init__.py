from .ensemble import CascadeEnsemble, NodeModel, load_ensemble, save_ensemble
from .inference import (
    CostStats,
    calibrate_level,
    calibrate_thresholds,
    cascade_batch,
    cascade_score,
    gate_recall,
    load_scores,
    write_scores,
)
from .hier_train import (
    HierarchicalTrainer,
    NodeTrainState,
    StrategyPath,
    mine_negatives,
    node_seed,
    pretrain_base,
    train_hierarchy,
)

__all__ = [
    "CascadeEnsemble",
    "CostStats",
    "HierarchicalTrainer",
    "NodeModel",
    "NodeTrainState",
    "StrategyPath",
    "calibrate_level",
    "calibrate_thresholds",
    "cascade_batch",
    "cascade_score",
    "gate_recall",
    "load_ensemble",
    "load_scores",
    "mine_negatives",
    "node_seed",
    "pretrain_base",
    "save_ensemble",
    "train_hierarchy",
    "write_scores",
]
