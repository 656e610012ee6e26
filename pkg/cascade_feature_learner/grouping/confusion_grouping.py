from typing import Sequence

import numpy as np

from ..core.interfaces import GroupingMethod
from .agglomerative import build_hierarchy
from .context import GroupingContext
from .hierarchy import HierarchyTree
from .similarity import confusion_similarity


class ConfusionGrouping(GroupingMethod):
    """Clusters classes that the model confuses with each other on the validation split."""

    NAME = "confusion"

    def __init__(self, debug: bool = False):
        self.debug = debug

    def is_usable(self, context: GroupingContext) -> bool:
        """Needs a model and validation samples of every class."""
        if context.model is None:
            return False
        present = set(np.unique(context.validation_data().labels).tolist())
        return set(context.classes) <= present

    def build(self, context: GroupingContext, group_counts: Sequence[int], seed: int) -> HierarchyTree:
        _ = seed
        if context.model is None:
            raise ValueError("confusion grouping needs a trained model")
        similarity = confusion_similarity(context.model, context.validation_data(), context.classes)
        return build_hierarchy(similarity, group_counts, debug=self.debug)
