"""Tests for experiment sweeps."""

import pytest

from cascade_feature_learner.core.config import RunConfig
from cascade_feature_learner.datagen.synthetic import generate_synthetic
from cascade_feature_learner.evaluation import experiments
from cascade_feature_learner.evaluation.experiments import (
    FAMILIES,
    ExperimentSpec,
    default_grid,
    parse_split_role,
    run_experiment,
)
from cascade_feature_learner.models.svm import train_ovr_svm
from tests.common.fixtures import small_config


class TestExperimentSpec:
    """Test cases for sweep specifications."""

    def test_unknown_family(self) -> None:
        """Test that the family name is validated."""
        with pytest.raises(ValueError, match="Unknown experiment family: nope"):
            ExperimentSpec("nope")

    def test_needs_seeds(self) -> None:
        """Test that an empty seed list is rejected."""
        with pytest.raises(ValueError, match="at least one seed"):
            ExperimentSpec("sampling", seeds=())

    def test_default_grid_filled_in(self) -> None:
        """Test that an empty grid becomes the family's standard grid."""
        spec = ExperimentSpec("level-sweep")
        assert spec.grid == ("1", "1,4", "1,4,7", "1,4,7,18")

    def test_every_family_has_a_grid(self) -> None:
        """Test the standard grids."""
        for family in FAMILIES:
            assert default_grid(family, RunConfig())
        assert default_grid("freeze", small_config()) == ("0", "1", "2")
        assert len(default_grid("sampling", RunConfig())) == 16


class TestSplitRole:
    """Test cases for split-role entries."""

    def test_parse(self) -> None:
        """Test lists of splits per role."""
        assert parse_split_role("pos=train,pretrain;neg=train") == (("train", "pretrain"), ("train",))

    @pytest.mark.parametrize("entry", ["pos=train", "pos=train;foo=val", "train;neg=train"])
    def test_invalid(self, entry: str) -> None:
        """Test entries missing a role or naming an unknown one."""
        with pytest.raises(ValueError, match="Invalid split-role entry"):
            parse_split_role(entry)


class TestRunExperiment:
    """Test cases for running sweeps end to end on small data."""

    def test_level_sweep(self) -> None:
        """Test that every grid point reports mAP and cost statistics."""
        spec = ExperimentSpec("level-sweep", ("1", "1,2"), (0,), small_config())
        report = run_experiment(spec)
        table = report.sweeps[0]
        assert report.command == "experiment level-sweep"
        assert [row.condition["group_counts"] for row in table.rows] == ["1", "1,2"]
        flat, two_level = table.rows
        assert 0.0 <= flat.per_seed[0] <= 1.0
        assert flat.stats["levels"] == 1.0
        assert two_level.stats["levels"] == 2.0
        assert "n_b_times_n_m_l2" in two_level.stats

    def test_failing_point_is_isolated(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that an infeasible grid point is recorded while the others still run."""
        spec = ExperimentSpec("sampling", ("rand_pos:2.0", "rand_pos:0.5"), (0,), small_config())
        report = run_experiment(spec)
        failed, kept = report.sweeps[0].rows
        assert failed.per_seed == {}
        assert "ratio r must be in (0, 1]" in failed.errors[0]
        assert 0 in kept.per_seed
        assert kept.stats["realized_ratio"] == pytest.approx(0.5, abs=0.01)
        assert "Warning: sampling point 'rand_pos:2.0' failed for seed 0" in capsys.readouterr().err

    def test_clustering_reports_planted_recovery(self) -> None:
        """Test that synthetic runs compare the level-2 groups with the planted ones."""
        spec = ExperimentSpec("clustering", ("random", "visual"), (0,), small_config())
        rows = run_experiment(spec).sweeps[0].rows
        for row in rows:
            assert row.stats["planted_recovered"] in (0.0, 1.0)
            assert sum(int(size) for size in row.stats["group_sizes"].split()) == 8

    def test_seeds_are_reproducible(self) -> None:
        """Test that the same spec gives the same numbers."""
        spec = ExperimentSpec("freeze", ("1",), (0,), small_config())
        assert run_experiment(spec).to_dict() == run_experiment(spec).to_dict()

    def test_sampling_keeps_full_svm_training_split(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that subsampling only affects finetuning; every SVM bank sees the whole training split."""
        svm_rows: list[int] = []

        def recording_train_ovr_svm(features, labels, class_ids, config):  # type: ignore[no-untyped-def]
            svm_rows.append(len(labels))
            return train_ovr_svm(features, labels, class_ids, config)

        monkeypatch.setattr(experiments, "train_ovr_svm", recording_train_ovr_svm)
        config = small_config()
        grid = ("none", "rand_pos:0.25", "rand_all:0.25", "pseudo_uniform:0.25")
        report = run_experiment(ExperimentSpec("sampling", grid, (0,), config))

        training_size = len(generate_synthetic(config.gen).dataset.split(config.pipeline.train_split))
        assert all(0 in row.per_seed for row in report.sweeps[0].rows)
        assert svm_rows == [training_size] * len(grid)
