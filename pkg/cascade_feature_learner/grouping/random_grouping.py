from typing import Sequence

from ..core.interfaces import GroupingMethod
from .agglomerative import random_hierarchy
from .context import GroupingContext
from .hierarchy import HierarchyTree


class RandomGrouping(GroupingMethod):
    """Baseline: groups with no relation to class similarity."""

    NAME = "random"

    def __init__(self, debug: bool = False):
        self.debug = debug

    def is_usable(self, context: GroupingContext) -> bool:
        return True

    def build(self, context: GroupingContext, group_counts: Sequence[int], seed: int) -> HierarchyTree:
        tree = random_hierarchy(context.classes, group_counts, seed)
        if self.debug:
            sizes = [tree.group_sizes(l) for l in range(1, tree.num_levels + 1)]
            print(f"Random hierarchy (seed {seed}): group sizes {sizes}")
        return tree
