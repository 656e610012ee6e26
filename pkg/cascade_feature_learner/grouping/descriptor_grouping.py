"""Groupings driven by one scalar per class: training accuracy, sample count, or values read from a file."""

import os
from typing import Sequence

from ..core.interfaces import GroupingMethod
from .agglomerative import build_hierarchy
from .context import GroupingContext
from .hierarchy import HierarchyTree
from .similarity import accuracy_descriptor, count_descriptor, load_scalar_descriptor, scalar_similarity


class AccuracyGrouping(GroupingMethod):
    """Classes with similar softmax accuracy on the training split end up together."""

    NAME = "accuracy"

    def __init__(self, debug: bool = False):
        self.debug = debug

    def is_usable(self, context: GroupingContext) -> bool:
        return context.model is not None

    def build(self, context: GroupingContext, group_counts: Sequence[int], seed: int) -> HierarchyTree:
        _ = seed
        if context.model is None:
            raise ValueError("accuracy grouping needs a trained model")
        descriptor = accuracy_descriptor(context.model, context.training_data())
        descriptor = {class_id: descriptor[class_id] for class_id in context.classes}
        return build_hierarchy(scalar_similarity(descriptor, self.NAME), group_counts, debug=self.debug)


class CountGrouping(GroupingMethod):
    """Classes with similar training sample counts end up together."""

    NAME = "count"

    def __init__(self, debug: bool = False):
        self.debug = debug

    def is_usable(self, context: GroupingContext) -> bool:
        return True

    def build(self, context: GroupingContext, group_counts: Sequence[int], seed: int) -> HierarchyTree:
        _ = seed
        descriptor = count_descriptor(context.training_data())
        return build_hierarchy(scalar_similarity(descriptor, self.NAME), group_counts, debug=self.debug)


class ScalarFileGrouping(GroupingMethod):
    """Per-class metadata (an average object size, say) supplied as ``<class_id> <value>`` lines."""

    NAME = "scalar-file"

    def __init__(self, debug: bool = False):
        self.debug = debug

    def is_usable(self, context: GroupingContext) -> bool:
        return context.descriptor_file is not None and os.path.isfile(context.descriptor_file)

    def build(self, context: GroupingContext, group_counts: Sequence[int], seed: int) -> HierarchyTree:
        _ = seed
        if context.descriptor_file is None:
            raise ValueError("scalar-file grouping needs descriptor_file")
        descriptor = load_scalar_descriptor(context.descriptor_file)
        missing = sorted(set(context.classes) - set(descriptor))
        if missing:
            raise ValueError(f"descriptor file {context.descriptor_file} has no value for class(es) {missing}")
        descriptor = {class_id: descriptor[class_id] for class_id in context.classes}
        return build_hierarchy(scalar_similarity(descriptor, self.NAME), group_counts, debug=self.debug)
