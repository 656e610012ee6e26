"""Tests for the one-vs-rest linear SVM bank."""

import os

import numpy as np
import pytest

from cascade_feature_learner.core.config import SvmConfig
from cascade_feature_learner.core.dataset import DatasetFormatError
from cascade_feature_learner.models.svm import (
    SENTINEL_SCORE,
    hinge_objective,
    load_svm,
    save_svm,
    svm_scores,
    train_ovr_svm,
)
from tests.common.fixtures import separable_dataset


class TestTraining:
    """Test cases for one-vs-rest training."""

    def test_separable_blobs_are_ranked(self) -> None:
        """Test that each class's own samples score highest on their SVM."""
        data = separable_dataset()
        bank = train_ovr_svm(data.features, data.labels, (1, 2, 3), SvmConfig(svm_lambda=1e-3, svm_iterations=300))
        scores = svm_scores(bank, data.features)
        assert scores.shape == (len(data), 3)
        for column, class_id in enumerate(bank.class_set):
            own = scores[data.labels == class_id, column]
            rest = scores[data.labels != class_id, column]
            assert np.mean(own[:, None] > rest[None, :]) >= 0.99
        assert bank.flagged == ()

    def test_objective_not_above_start(self) -> None:
        """Test that the returned solution is no worse than the all-zero start."""
        rng = np.random.default_rng(4)
        features = rng.normal(size=(40, 3))
        labels = rng.integers(0, 3, size=40)
        config = SvmConfig(svm_lambda=1e-2, svm_iterations=25)
        bank = train_ovr_svm(features, labels, (1, 2), config)
        for k, class_id in enumerate(bank.class_set):
            targets = np.where(labels == class_id, 1.0, -1.0)
            solution = np.append(bank.weights[k], bank.biases[k])
            augmented = np.hstack([features, np.ones((40, 1))])
            trained = hinge_objective(solution, targets * (augmented @ solution), config.svm_lambda)
            assert trained <= hinge_objective(np.zeros(4), np.zeros(40), config.svm_lambda) + 1e-12

    def test_class_without_positives_is_flagged(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that a class with no positives scores the sentinel and warns."""
        data = separable_dataset()
        bank = train_ovr_svm(data.features, data.labels, (1, 5), SvmConfig(svm_iterations=10))
        assert bank.flagged == (5,)
        scores = svm_scores(bank, data.features)
        assert np.all(scores[:, 1] == SENTINEL_SCORE)
        assert np.all(scores[:, 0] > SENTINEL_SCORE)
        assert "Warning: class 5 has 0 positive(s)" in capsys.readouterr().err

    def test_class_without_negatives_is_flagged(self) -> None:
        """Test that a class covering every sample is flagged."""
        bank = train_ovr_svm(np.ones((3, 2)), [1, 1, 1], (1,), SvmConfig(svm_iterations=5))
        assert bank.flagged == (1,)

    def test_empty_features(self) -> None:
        """Test that an empty feature set is rejected."""
        with pytest.raises(ValueError, match="empty feature set"):
            train_ovr_svm(np.zeros((0, 2)), [], (1,))

    def test_score_dimension_mismatch(self) -> None:
        """Test that scoring checks the feature width."""
        bank = train_ovr_svm(np.eye(3), [0, 1, 0], (1,), SvmConfig(svm_iterations=5))
        with pytest.raises(ValueError, match="dimension mismatch"):
            svm_scores(bank, np.zeros((1, 2)))


class TestSvmFormat:
    """Test cases for the SVM1 text format."""

    def test_save_load(self, tmp_path: str) -> None:
        """Test that weights, biases and flagged classes survive a save/load cycle."""
        data = separable_dataset()
        bank = train_ovr_svm(data.features, data.labels, (2, 7), SvmConfig(svm_iterations=20))
        path = os.path.join(tmp_path, "bank.svm")
        save_svm(bank, path)
        loaded = load_svm(path)
        assert loaded.class_set == (2, 7)
        assert loaded.flagged == (7,)
        assert np.array_equal(loaded.weights, bank.weights)
        assert np.array_equal(loaded.biases, bank.biases)

    def test_truncated_file(self, tmp_path: str) -> None:
        """Test that a missing class row reports its line number."""
        path = os.path.join(tmp_path, "bank.svm")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("SVM1\nclass_set 1 2\ndim 2\nflagged\n1 0.0 1.0 2.0\n")
        with pytest.raises(DatasetFormatError) as exc_info:
            load_svm(path)
        assert exc_info.value.line == 6

    def test_header_error_names_its_line(self, tmp_path: str) -> None:
        """Test that a missing header line is reported at the line where it was expected."""
        path = os.path.join(tmp_path, "bank.svm")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("SVM1\nclass_set 1 2\nflagged\n")
        with pytest.raises(DatasetFormatError, match="expected 'dim'") as exc_info:
            load_svm(path)
        assert exc_info.value.line == 3
