"""Tests for evaluation reports and sweep tables."""

import csv
import io

from cascade_feature_learner.cascade.inference import CostStats
from cascade_feature_learner.evaluation.report import EvalReport, SweepRow, SweepTable


def _table() -> SweepTable:
    return SweepTable(
        "sampling",
        [
            SweepRow(
                {"family": "sampling", "scheme": "rand_pos:0.5"},
                per_seed={0: 0.5, 1: 0.75},
                tail_per_seed={0: 0.25},
                stats={"realized_ratio": 0.5},
            ),
            SweepRow({"family": "sampling", "scheme": "rand_pos:2.0"}, errors={0: "ratio r must be in (0, 1]"}),
        ],
    )


class TestSweepTable:
    """Test cases for sweep summaries."""

    def test_row_summary(self) -> None:
        """Test mean, min and max over seeds."""
        row = _table().rows[0].to_dict()
        assert row["map"] == {"mean": 0.625, "min": 0.5, "max": 0.75}
        assert row["map_per_seed"] == {"0": 0.5, "1": 0.75}
        assert row["tail_map"]["mean"] == 0.25

    def test_failed_row_has_no_summary(self) -> None:
        """Test that a row with only errors reports None values and the error text."""
        row = _table().rows[1].to_dict()
        assert row["map"] == {"mean": None, "min": None, "max": None}
        assert row["errors"] == {"0": "ratio r must be in (0, 1]"}

    def test_csv(self) -> None:
        """Test the flat CSV layout."""
        records = list(csv.DictReader(io.StringIO(_table().to_csv())))
        assert len(records) == 2
        assert records[0]["condition"] == "family=sampling;scheme=rand_pos:0.5"
        assert records[0]["seeds"] == "0 1"
        assert records[0]["map_per_seed"] == "0:0.5 1:0.75"
        assert records[0]["map_mean"] == "0.625"
        assert records[0]["realized_ratio"] == "0.5"
        assert records[1]["map_mean"] == ""
        assert records[1]["error"] == "seed 0: ratio r must be in (0, 1]"


class TestEvalReport:
    """Test cases for the report dictionary."""

    def test_optional_sections(self) -> None:
        """Test that only populated sections appear."""
        report = EvalReport(command="eval", seeds=[0])
        assert set(report.to_dict()) == {"command", "seeds", "config_snapshot"}

    def test_full_report(self) -> None:
        """Test class keys, cost statistics and sweeps."""
        report = EvalReport(
            command="pipeline",
            per_class_ap={2: 0.5, 1: 1.0},
            mean_ap=0.75,
            tail_map=0.5,
            cost_stats=CostStats((4, 6), (1, 2), 4),
            thresholds=["-0.5"],
            gate_recall={"2_1": 1.0},
            sweeps=[_table()],
        )
        result = report.to_dict()
        assert list(result["per_class_ap"]) == ["1", "2"]
        assert result["map"] == 0.75
        assert result["cost_stats"]["total_evaluations"] == 10
        assert result["thresholds"] == ["-0.5"]
        assert result["sweeps"][0]["family"] == "sampling"
