from .context import GroupingContext
from .hierarchy import HierarchyTree, check_group_counts, load_hierarchy, planted_recovery, save_hierarchy
from .similarity import (
    SimilarityMatrix,
    accuracy_descriptor,
    class_means,
    confusion_similarity,
    count_descriptor,
    load_scalar_descriptor,
    scalar_similarity,
    visual_similarity,
)
from .agglomerative import build_hierarchy, random_hierarchy

__all__ = [
    "GroupingContext",
    "HierarchyTree",
    "SimilarityMatrix",
    "accuracy_descriptor",
    "build_hierarchy",
    "check_group_counts",
    "class_means",
    "confusion_similarity",
    "count_descriptor",
    "load_hierarchy",
    "load_scalar_descriptor",
    "planted_recovery",
    "random_hierarchy",
    "save_hierarchy",
    "scalar_similarity",
    "visual_similarity",
]
