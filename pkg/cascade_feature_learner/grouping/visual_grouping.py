from typing import Sequence

from ..core.interfaces import GroupingMethod
from ..models.mlp import extract_features
from .agglomerative import build_hierarchy
from .context import GroupingContext
from .hierarchy import HierarchyTree
from .similarity import visual_similarity


class VisualGrouping(GroupingMethod):
    """Clusters classes by the inner product of their mean learned features on the training split."""

    NAME = "visual"

    def __init__(self, debug: bool = False):
        self.debug = debug

    def is_usable(self, context: GroupingContext) -> bool:
        return context.model is not None

    def build(self, context: GroupingContext, group_counts: Sequence[int], seed: int) -> HierarchyTree:
        _ = seed  # deterministic given the model
        if context.model is None:
            raise ValueError("visual grouping needs a trained model")
        training = context.training_data()
        positives = training.subset(training.positive_mask.nonzero()[0])
        features = extract_features(context.model, positives.features, normalize=context.normalize_features)
        similarity = visual_similarity(features, positives.labels, context.classes)
        if self.debug:
            print(f"Visual similarity over {len(positives)} training positives, {len(context.classes)} classes")
        return build_hierarchy(similarity, group_counts, debug=self.debug)
