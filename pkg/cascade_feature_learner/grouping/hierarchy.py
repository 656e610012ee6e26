"""Nested partitions of class ids across hierarchy levels.

Levels and group indices are 1-based, matching the ``l j: ids`` text format. Within a level, groups are ordered by
their smallest class id.
"""

from __future__ import annotations

from typing import Iterator, Mapping, Optional, Sequence

from ..core.dataset import DatasetFormatError

Node = tuple[int, int]


class HierarchyTree:
    """Groups S_{l,j} for levels 1..L with parent/child links.

    Raises:
        ValueError: if level 1 is not the single group of all classes, a level does not partition the classes,
            or a group is not contained in one group of the level above
    """

    def __init__(self, levels: Sequence[Sequence[Sequence[int]]]):
        if not levels:
            raise ValueError("a hierarchy needs at least one level")
        canonical = [
            sorted((tuple(sorted(int(c) for c in group)) for group in level), key=_group_key) for level in levels
        ]
        if len(canonical[0]) != 1:
            raise ValueError(f"level 1 must hold exactly one group, got {len(canonical[0])}")
        classes = canonical[0][0]
        if not classes or len(set(classes)) != len(classes):
            raise ValueError("level 1 must list every class exactly once")

        self._levels: list[list[tuple[int, ...]]] = canonical
        self._parents: list[list[int]] = [[]]
        self._children: list[list[list[int]]] = []
        for depth, level in enumerate(canonical, start=1):
            if any(not group for group in level):
                raise ValueError(f"level {depth} has an empty group")
            members = [class_id for group in level for class_id in group]
            if sorted(members) != list(classes):
                raise ValueError(f"level {depth} is not a partition of the {len(classes)} classes")
            if depth == 1:
                continue
            owner = {class_id: j for j, group in enumerate(canonical[depth - 2], start=1) for class_id in group}
            parents = []
            for j, group in enumerate(level, start=1):
                candidates = {owner[class_id] for class_id in group}
                if len(candidates) != 1:
                    raise ValueError(f"group ({depth}, {j}) straddles groups {sorted(candidates)} of level {depth - 1}")
                parents.append(candidates.pop())
            self._parents.append(parents)

        for depth in range(1, len(canonical) + 1):
            children: list[list[int]] = [[] for _ in canonical[depth - 1]]
            if depth < len(canonical):
                for j, parent in enumerate(self._parents[depth], start=1):
                    children[parent - 1].append(j)
            self._children.append(children)
        self._leaf_of = {class_id: j for j, group in enumerate(canonical[-1], start=1) for class_id in group}

    def __repr__(self) -> str:
        return f"HierarchyTree(group_counts={list(self.group_counts)})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HierarchyTree) and self._levels == other._levels

    def __hash__(self) -> int:
        return hash(tuple(tuple(level) for level in self._levels))

    @property
    def num_levels(self) -> int:
        return len(self._levels)

    @property
    def group_counts(self) -> tuple[int, ...]:
        return tuple(len(level) for level in self._levels)

    @property
    def classes(self) -> tuple[int, ...]:
        return self._levels[0][0]

    def level(self, l: int) -> list[tuple[int, ...]]:
        self._check_level(l)
        return list(self._levels[l - 1])

    def group(self, l: int, j: int) -> tuple[int, ...]:
        self._check_node(l, j)
        return self._levels[l - 1][j - 1]

    def nodes(self, l: Optional[int] = None) -> Iterator[Node]:
        """Nodes of one level, or of every level in (l, j) order."""
        levels = [l] if l is not None else range(1, self.num_levels + 1)
        for depth in levels:
            self._check_level(depth)
            for j in range(1, len(self._levels[depth - 1]) + 1):
                yield depth, j

    def parent(self, l: int, j: int) -> int:
        """Index of the level l-1 group containing S_{l,j}."""
        self._check_node(l, j)
        if l == 1:
            raise ValueError("the root has no parent")
        return self._parents[l - 1][j - 1]

    def children(self, l: int, j: int) -> list[int]:
        self._check_node(l, j)
        return list(self._children[l - 1][j - 1])

    def ancestor(self, l: int, j: int, level: int) -> int:
        """Index of the group at ``level`` (<= l) that contains S_{l,j}."""
        self._check_node(l, j)
        if not 1 <= level <= l:
            raise ValueError(f"ancestor level must be in [1, {l}], got {level}")
        while l > level:
            j = self._parents[l - 1][j - 1]
            l -= 1
        return j

    def group_of(self, l: int, class_id: int) -> int:
        self._check_level(l)
        if class_id not in self._leaf_of:
            raise ValueError(f"class {class_id} is not in the hierarchy")
        return self.ancestor(self.num_levels, self._leaf_of[class_id], l)

    def leaf_of(self, class_id: int) -> int:
        return self.group_of(self.num_levels, class_id)

    def truncate(self, num_levels: int) -> HierarchyTree:
        """The first ``num_levels`` levels as a tree of their own."""
        if not 1 <= num_levels <= self.num_levels:
            raise ValueError(f"num_levels must be in [1, {self.num_levels}], got {num_levels}")
        return HierarchyTree(self._levels[:num_levels])

    def group_sizes(self, l: int) -> list[int]:
        return [len(group) for group in self.level(l)]

    def to_lines(self) -> list[str]:
        return [
            f"{l} {j}: " + " ".join(str(class_id) for class_id in self.group(l, j)) for l, j in self.nodes()
        ]

    def _check_level(self, l: int) -> None:
        if not 1 <= l <= self.num_levels:
            raise ValueError(f"level must be in [1, {self.num_levels}], got {l}")

    def _check_node(self, l: int, j: int) -> None:
        self._check_level(l)
        if not 1 <= j <= len(self._levels[l - 1]):
            raise ValueError(f"group index at level {l} must be in [1, {len(self._levels[l - 1])}], got {j}")


def _group_key(group: tuple[int, ...]) -> int:
    return group[0] if group else -1


def check_group_counts(group_counts: Sequence[int], num_classes: int) -> tuple[int, ...]:
    """Validate [J_1..J_L]: J_1 = 1, non-decreasing, J_L <= number of classes."""
    counts = tuple(int(count) for count in group_counts)
    if not counts or counts[0] != 1:
        raise ValueError(f"group_counts must start with 1, got {list(counts)}")
    if any(b < a for a, b in zip(counts, counts[1:])):
        raise ValueError(f"group_counts must be non-decreasing, got {list(counts)}")
    if counts[-1] > num_classes:
        raise ValueError(f"group_counts ask for {counts[-1]} groups but there are only {num_classes} classes")
    return counts


def save_hierarchy(tree: HierarchyTree, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(tree.to_lines()) + "\n")


def load_hierarchy(path: str, classes: Optional[Sequence[int]] = None) -> HierarchyTree:
    """Read ``l j: id id ...`` lines.

    A missing level 1 is synthesized as the union of the deepest level (or ``classes`` when given). Group indices
    in the file only need to be unique within a level; the tree orders groups by smallest class id.
    """
    groups: dict[int, dict[int, list[int]]] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            head, separator, body = line.partition(":")
            try:
                if not separator:
                    raise ValueError("missing ':'")
                l_token, j_token = head.split()
                l, j = int(l_token), int(j_token)
                members = [int(token) for token in body.split()]
            except ValueError as exc:
                raise DatasetFormatError(f"expected 'l j: id id ...' ({exc})", line_number) from exc
            if l < 1:
                raise DatasetFormatError(f"level must be >= 1, got {l}", line_number)
            if j in groups.setdefault(l, {}):
                raise DatasetFormatError(f"group ({l}, {j}) listed twice", line_number)
            if not members:
                raise DatasetFormatError(f"group ({l}, {j}) is empty", line_number)
            groups[l][j] = members

    if not groups:
        raise DatasetFormatError("hierarchy file lists no groups", 1)
    deepest = max(groups)
    missing = [l for l in range(2, deepest + 1) if l not in groups]
    if missing:
        raise ValueError(f"hierarchy file skips level(s) {missing}")
    if 1 not in groups:
        universe = list(classes) if classes is not None else [c for group in groups[deepest].values() for c in group]
        groups[1] = {1: universe}

    return HierarchyTree([list(groups[l].values()) for l in range(1, deepest + 1)])


def planted_recovery(tree: HierarchyTree, truth: Mapping[int, int]) -> bool:
    """True when the level-2 groups equal the planted class -> group assignment exactly."""
    if tree.num_levels < 2:
        return False
    planted: dict[int, set[int]] = {}
    for class_id, group_id in truth.items():
        planted.setdefault(group_id, set()).add(class_id)
    return {frozenset(group) for group in tree.level(2)} == {frozenset(group) for group in planted.values()}
