"""Test CLI interface functionality."""

import json
import os

import pytest

from cascade_feature_learner.__main__ import (
    build_config,
    main,
    parse_arguments,
    parse_group_counts,
    parse_thresholds,
)

SMALL_CONFIG = """\
# small synthetic run
num_classes = 8
dim = 6
n_total = 480
groups = 2
between_sigma = 1.5
background_ratio = 1.0
epochs = 4
batch_size = 16
hidden_dims = 12
svm_iterations = 60
group_counts = 1,2
negative_floor = 20
min_node_epochs = 1
"""


@pytest.fixture(name="config_file")
def fixture_config_file(tmp_path: str) -> str:
    path = os.path.join(tmp_path, "small.cfg")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(SMALL_CONFIG)
    return path


def _read(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


class TestCliArguments:
    """Test CLI argument parsing and validation."""

    def test_common_defaults(self) -> None:
        """Test default values of the shared options."""
        args = parse_arguments(["pretrain", "--data", "d.ltf"])
        assert args.command == "pretrain"
        assert args.out == "."
        assert args.seed is None
        assert args.debug is False
        assert args.deterministic is False

    def test_experiment_arguments(self) -> None:
        """Test grid and seed lists."""
        args = parse_arguments(["experiment", "--family", "sampling", "--grid", "none", "rand_pos:0.5", "--seeds", "3"])
        assert args.grid == ["none", "rand_pos:0.5"]
        assert args.seeds == [3]

    def test_missing_required_option_exits_1(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that usage errors exit with status 1."""
        with pytest.raises(SystemExit) as excinfo:
            parse_arguments(["pretrain"])
        assert excinfo.value.code == 1
        assert "--data" in capsys.readouterr().err

    def test_unknown_command_exits_1(self) -> None:
        """Test that an unknown subcommand is a usage error."""
        with pytest.raises(SystemExit) as excinfo:
            parse_arguments(["nope"])
        assert excinfo.value.code == 1

    def test_unknown_method_exits_1(self) -> None:
        """Test that grouping methods are restricted to the known names."""
        with pytest.raises(SystemExit) as excinfo:
            parse_arguments(["cluster", "--data", "d.ltf", "--method", "nope"])
        assert excinfo.value.code == 1

    def test_seed_flag_overrides_config(self, config_file: str) -> None:
        """Test that --seed beats the file and reaches both generator and training."""
        config = build_config(parse_arguments(["datagen", "--config", config_file, "--seed", "7"]))
        assert config.gen.seed == 7 and config.train.seed == 7
        assert config.gen.num_classes == 8
        assert config.train.hidden_dims == (12,)

    def test_parse_thresholds(self) -> None:
        """Test numbers, -inf and auto."""
        assert parse_thresholds(None, 3) is None
        assert parse_thresholds("auto,-inf", 3) == [None, float("-inf")]
        assert parse_thresholds("0.5", 2) == [0.5]
        with pytest.raises(ValueError, match="needs 2 threshold"):
            parse_thresholds("0.5", 3)
        with pytest.raises(ValueError, match="Invalid threshold"):
            parse_thresholds("high", 2)

    def test_parse_group_counts(self) -> None:
        """Test comma-separated group counts."""
        assert parse_group_counts("1, 4,7") == (1, 4, 7)
        with pytest.raises(ValueError, match="Invalid group counts"):
            parse_group_counts("1,four")


class TestCliRuns:
    """Test running subcommands end to end."""

    def test_missing_dataset_exits_2(self, tmp_path: str, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that a missing input file exits with status 2 and an error line."""
        with pytest.raises(SystemExit) as excinfo:
            main(["pretrain", "--data", os.path.join(tmp_path, "missing.ltf"), "--out", str(tmp_path)])
        assert excinfo.value.code == 2
        assert capsys.readouterr().err.startswith("Error: ")

    def test_bad_config_key_exits_2(self, tmp_path: str) -> None:
        """Test that unknown configuration keys are reported."""
        path = os.path.join(tmp_path, "bad.cfg")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("no_such_key = 1\n")
        with pytest.raises(SystemExit) as excinfo:
            main(["datagen", "--config", path, "--out", str(tmp_path)])
        assert excinfo.value.code == 2

    def test_datagen_is_deterministic(self, tmp_path: str, config_file: str) -> None:
        """Test that the same seed writes byte-identical datasets."""
        first, second = os.path.join(tmp_path, "a"), os.path.join(tmp_path, "b")
        for out in (first, second):
            main(["datagen", "--config", config_file, "--seed", "3", "--out", out])
        assert _read(os.path.join(first, "dataset.ltf")) == _read(os.path.join(second, "dataset.ltf"))
        assert _read(os.path.join(first, "truth.txt")) == _read(os.path.join(second, "truth.txt"))
        with open(os.path.join(first, "report.json"), "r", encoding="utf-8") as handle:
            assert json.load(handle)["artifacts"] == {"dataset": "dataset.ltf", "truth": "truth.txt"}

    def test_full_chain(self, tmp_path: str, config_file: str) -> None:
        """Test datagen, pretrain, cluster, train-hier, calibrate, infer and eval in sequence."""
        run = os.path.join(tmp_path, "run")
        common = ["--config", config_file, "--seed", "1", "--deterministic"]
        data = os.path.join(run, "dataset.ltf")
        main(["datagen", *common, "--out", run])
        main(["pretrain", *common, "--data", data, "--out", run])
        main(
            ["cluster", *common, "--data", data, "--model", os.path.join(run, "base.mlp"), "--method", "visual"]
            + ["--out", run]
        )
        main(
            ["train-hier", *common, "--data", data, "--model", os.path.join(run, "base.mlp")]
            + ["--tree", os.path.join(run, "hierarchy.txt"), "--thresholds=-inf", "--out", run]
        )
        main(["calibrate", *common, "--data", data, "--ensemble", os.path.join(run, "ensemble"), "--out", run])
        main(["infer", *common, "--data", data, "--ensemble", os.path.join(run, "ensemble"), "--out", run])
        with open(os.path.join(run, "report.json"), "r", encoding="utf-8") as handle:
            infer_report = json.load(handle)
        assert infer_report["command"] == "infer"
        assert infer_report["cost_stats"]["levels"][0]["n_m"] == 1
        assert infer_report["thresholds"] != ["-inf"]

        reports = []
        for name in ("eval1", "eval2"):
            out = os.path.join(tmp_path, name)
            main(["eval", *common, "--data", data, "--scores", os.path.join(run, "scores.txt"), "--out", out])
            reports.append(_read(os.path.join(out, "report.json")))
        assert reports[0] == reports[1]
        evaluation = json.loads(reports[0])
        assert 0.0 <= evaluation["map"] <= 1.0
        assert len(evaluation["per_class_ap"]) == 8

    def test_eval_rejects_foreign_scores(self, tmp_path: str, config_file: str) -> None:
        """Test that a score file for other samples is refused."""
        main(["datagen", "--config", config_file, "--out", str(tmp_path)])
        scores = os.path.join(tmp_path, "scores.txt")
        with open(scores, "w", encoding="utf-8") as handle:
            handle.write("nobody " + " ".join(["0.0"] * 8) + "\n")
        with pytest.raises(SystemExit) as excinfo:
            main(["eval", "--data", os.path.join(tmp_path, "dataset.ltf"), "--scores", scores, "--out", str(tmp_path)])
        assert excinfo.value.code == 2
