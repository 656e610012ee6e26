from .mlp import (
    MlpModel,
    TrainingDivergedError,
    default_layer_dims,
    extract_features,
    forward,
    freeze_all,
    freeze_lower,
    gradients,
    init_mlp,
    load_mlp,
    predict_classes,
    save_mlp,
    softmax_accuracy_per_class,
    softmax_xent,
    spawn_child,
    train,
)
from .svm import SENTINEL_SCORE, SvmBank, load_svm, save_svm, svm_scores, train_ovr_svm

__all__ = [
    "MlpModel",
    "SENTINEL_SCORE",
    "SvmBank",
    "TrainingDivergedError",
    "default_layer_dims",
    "extract_features",
    "forward",
    "freeze_all",
    "freeze_lower",
    "gradients",
    "init_mlp",
    "load_mlp",
    "load_svm",
    "predict_classes",
    "save_mlp",
    "save_svm",
    "softmax_accuracy_per_class",
    "softmax_xent",
    "spawn_child",
    "svm_scores",
    "train",
    "train_ovr_svm",
]
