import os
from typing import Sequence

from ..core.interfaces import GroupingMethod
from .context import GroupingContext
from .hierarchy import HierarchyTree, load_hierarchy


class TaxonomyFileGrouping(GroupingMethod):
    """Groups taken verbatim from a user-supplied taxonomy file."""

    NAME = "taxonomy-file"

    def __init__(self, debug: bool = False):
        self.debug = debug

    def is_usable(self, context: GroupingContext) -> bool:
        return context.taxonomy_file is not None and os.path.isfile(context.taxonomy_file)

    def build(self, context: GroupingContext, group_counts: Sequence[int], seed: int) -> HierarchyTree:
        """Load and validate the file; its levels must match ``group_counts`` (deeper files are truncated)."""
        _ = seed
        if context.taxonomy_file is None:
            raise ValueError("taxonomy-file grouping needs taxonomy_file")
        tree = load_hierarchy(context.taxonomy_file, classes=context.classes)
        if set(tree.classes) != set(context.classes):
            raise ValueError(f"taxonomy file {context.taxonomy_file} does not cover classes 1..{len(context.classes)}")
        counts = tuple(group_counts)
        if tree.num_levels > len(counts):
            tree = tree.truncate(len(counts))
        if tree.group_counts != counts:
            raise ValueError(
                f"taxonomy file {context.taxonomy_file} has group counts {list(tree.group_counts)}, "
                f"requested {list(counts)}"
            )
        if self.debug:
            print(f"Loaded taxonomy from {context.taxonomy_file}: group counts {list(counts)}")
        return tree
