"""Hierarchy construction: average-linkage agglomeration and seeded random refinement.

Coarser levels come from continued merging of the finer clusters, so every level nests in the one above.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .hierarchy import HierarchyTree, check_group_counts
from .similarity import SimilarityMatrix

TIE_TOLERANCE = 1e-12


def similarity_to_distance(similarity: SimilarityMatrix) -> np.ndarray:
    """1 - similarity min-max normalized over the off-diagonal entries; zero diagonal."""
    matrix = similarity.matrix
    size = matrix.shape[0]
    distance = np.ones((size, size))
    if size > 1:
        off_diagonal = matrix[~np.eye(size, dtype=bool)]
        low, high = off_diagonal.min(), off_diagonal.max()
        if high > low:
            distance = 1.0 - (matrix - low) / (high - low)
    np.fill_diagonal(distance, 0.0)
    return distance


def build_hierarchy(similarity: SimilarityMatrix, group_counts: Sequence[int], debug: bool = False) -> HierarchyTree:
    """Average-linkage clustering with a snapshot each time the cluster count reaches a requested J_l.

    Among pairs within TIE_TOLERANCE of the closest distance, the pair whose smallest class ids are
    lexicographically smallest merges first.
    """
    classes = similarity.class_ids
    counts = check_group_counts(group_counts, len(classes))
    distance = similarity_to_distance(similarity)
    clusters: list[tuple[int, ...]] = [(class_id,) for class_id in classes]
    active = np.ones(len(classes), dtype=bool)
    wanted = set(counts)
    snapshots: dict[int, list[tuple[int, ...]]] = {}

    remaining = len(classes)
    while True:
        if remaining in wanted:
            snapshots[remaining] = [clusters[i] for i in np.flatnonzero(active)]
        if remaining <= counts[0]:
            break
        i, j = _closest_pair(distance, active, clusters)
        size_i, size_j = len(clusters[i]), len(clusters[j])
        # Lance-Williams update for average linkage
        merged_row = (size_i * distance[i] + size_j * distance[j]) / (size_i + size_j)
        distance[i, :] = merged_row
        distance[:, i] = merged_row
        distance[i, i] = 0.0
        active[j] = False
        clusters[i] = tuple(sorted(clusters[i] + clusters[j]))
        if debug:
            print(f"merge {remaining} -> {remaining - 1}: {clusters[i]}")
        remaining -= 1

    return HierarchyTree([snapshots[count] for count in counts])


def _closest_pair(distance: np.ndarray, active: np.ndarray, clusters: list[tuple[int, ...]]) -> tuple[int, int]:
    positions = np.flatnonzero(active)
    block = distance[np.ix_(positions, positions)]
    upper = np.triu(np.ones_like(block, dtype=bool), k=1)
    best = block[upper].min()
    rows, cols = np.nonzero(upper & (block <= best + TIE_TOLERANCE))
    candidates = [(positions[r], positions[c]) for r, c in zip(rows, cols)]
    return min(candidates, key=lambda pair: tuple(sorted((clusters[pair[0]][0], clusters[pair[1]][0]))))


def random_hierarchy(classes: Sequence[int], group_counts: Sequence[int], seed: int) -> HierarchyTree:
    """Seeded top-down refinement: each extra group comes from splitting a random splittable group at a random
    point of a random permutation of its members."""
    class_list = sorted(int(c) for c in classes)
    counts = check_group_counts(group_counts, len(class_list))
    rng = np.random.default_rng(seed)
    current: list[tuple[int, ...]] = [tuple(class_list)]
    levels = [list(current)]
    for target in counts[1:]:
        while len(current) < target:
            splittable = [k for k, group in enumerate(current) if len(group) > 1]
            chosen = current.pop(splittable[rng.integers(len(splittable))])
            shuffled = [chosen[k] for k in rng.permutation(len(chosen))]
            cut = int(rng.integers(1, len(shuffled)))
            current.extend([tuple(sorted(shuffled[:cut])), tuple(sorted(shuffled[cut:]))])
            current.sort(key=lambda group: group[0])
        levels.append(list(current))
    return HierarchyTree(levels)
