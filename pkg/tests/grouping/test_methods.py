"""Tests for the grouping methods and their usability checks."""

import os

import pytest

from cascade_feature_learner.core.orchestrator import Orchestrator
from cascade_feature_learner.grouping.confusion_grouping import ConfusionGrouping
from cascade_feature_learner.grouping.context import GroupingContext
from cascade_feature_learner.grouping.descriptor_grouping import AccuracyGrouping, CountGrouping, ScalarFileGrouping
from cascade_feature_learner.grouping.random_grouping import RandomGrouping
from cascade_feature_learner.grouping.taxonomy_grouping import TaxonomyFileGrouping
from cascade_feature_learner.grouping.visual_grouping import VisualGrouping
from cascade_feature_learner.models.mlp import init_mlp
from tests.common.fixtures import make_dataset


def _context(**kwargs: object) -> GroupingContext:
    labels = [0, 1, 1, 2, 2, 3, 3, 4, 4, 4]
    splits = ["train"] * 6 + ["val"] * 4
    dataset = make_dataset(labels, splits=splits, num_classes=4, dim=3)
    return GroupingContext(dataset=dataset, **kwargs)  # type: ignore[arg-type]


class TestUsability:
    """Test cases for is_usable across methods."""

    def test_model_based_methods_need_a_model(self) -> None:
        """Test that visual, confusion and accuracy grouping refuse a context without a model."""
        context = _context()
        for method in (VisualGrouping(), ConfusionGrouping(), AccuracyGrouping()):
            assert not method.is_usable(context)
        assert CountGrouping().is_usable(context)
        assert RandomGrouping().is_usable(context)

    def test_confusion_needs_every_class_in_validation(self) -> None:
        """Test that classes missing from the validation split make confusion grouping unusable."""
        context = _context(model=init_mlp((3, 4, 5), (1, 2, 3, 4), seed=0))
        assert not ConfusionGrouping().is_usable(context)
        assert VisualGrouping().is_usable(context)

    def test_file_methods_need_files(self, tmp_path: str) -> None:
        """Test that file-driven methods need an existing file."""
        missing = os.path.join(tmp_path, "nope.txt")
        assert not ScalarFileGrouping().is_usable(_context(descriptor_file=missing))
        assert not TaxonomyFileGrouping().is_usable(_context(taxonomy_file=missing))


class TestBuild:
    """Test cases for building hierarchies."""

    def test_count_grouping(self) -> None:
        """Test that classes with similar counts are grouped."""
        labels = [1] * 10 + [2] * 9 + [3] * 2 + [4]
        context = GroupingContext(dataset=make_dataset(labels, num_classes=4))
        tree = CountGrouping().build(context, (1, 2), seed=0)
        assert tree.level(2) == [(1, 2), (3, 4)]

    def test_visual_grouping_covers_classes(self) -> None:
        """Test that visual grouping returns a tree over every class."""
        context = _context(model=init_mlp((3, 4, 5), (1, 2, 3, 4), seed=0))
        labels = [1, 1, 2, 2, 3, 3, 4, 4]
        context = GroupingContext(dataset=make_dataset(labels, num_classes=4, dim=3), model=context.model)
        tree = VisualGrouping().build(context, (1, 2), seed=0)
        assert tree.classes == (1, 2, 3, 4)
        assert tree.group_counts == (1, 2)

    def test_scalar_file_grouping(self, tmp_path: str) -> None:
        """Test grouping by values read from a file."""
        path = os.path.join(tmp_path, "sizes.txt")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("1 0.1\n2 5.0\n3 0.2\n4 5.5\n")
        context = _context(descriptor_file=path)
        tree = ScalarFileGrouping().build(context, (1, 2), seed=0)
        assert tree.level(2) == [(1, 3), (2, 4)]

    def test_scalar_file_missing_class(self, tmp_path: str) -> None:
        """Test that every class needs a value."""
        path = os.path.join(tmp_path, "sizes.txt")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("1 0.1\n2 5.0\n")
        with pytest.raises(ValueError, match=r"no value for class\(es\) \[3, 4\]"):
            ScalarFileGrouping().build(_context(descriptor_file=path), (1, 2), seed=0)

    def test_taxonomy_file(self, tmp_path: str) -> None:
        """Test that a taxonomy file is used as given and truncated to the requested depth."""
        path = os.path.join(tmp_path, "taxonomy.txt")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("2 1: 1 4\n2 2: 2 3\n3 1: 1\n3 2: 4\n3 3: 2 3\n")
        tree = TaxonomyFileGrouping().build(_context(taxonomy_file=path), (1, 2), seed=0)
        assert tree.level(2) == [(1, 4), (2, 3)]

    def test_taxonomy_count_mismatch(self, tmp_path: str) -> None:
        """Test that a taxonomy with other group counts is rejected."""
        path = os.path.join(tmp_path, "taxonomy.txt")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("2 1: 1 4\n2 2: 2 3\n")
        with pytest.raises(ValueError, match="requested"):
            TaxonomyFileGrouping().build(_context(taxonomy_file=path), (1, 3), seed=0)

    def test_random_grouping_uses_seed(self) -> None:
        """Test that the random method is reproducible per seed."""
        context = _context()
        assert RandomGrouping().build(context, (1, 2), seed=3) == RandomGrouping().build(context, (1, 2), seed=3)


class TestMethodSelection:
    """Test cases for choosing a method by name."""

    def test_unknown_method(self) -> None:
        """Test that an unknown method name lists the available ones."""
        with pytest.raises(ValueError, match="Available methods: accuracy, confusion, count"):
            Orchestrator(grouping_method="nope")

    def test_unusable_method(self) -> None:
        """Test that cluster refuses a method whose inputs are missing."""
        orchestrator = Orchestrator(grouping_method="visual")
        with pytest.raises(ValueError, match="cannot run"):
            orchestrator.cluster(_context().dataset, model=None)
