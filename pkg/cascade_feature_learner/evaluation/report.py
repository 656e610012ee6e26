from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..cascade.inference import CostStats


@dataclass
class SweepRow:
    """One grid point: its condition, the mAP reached with every seed, and family-specific statistics."""

    condition: dict[str, str]
    per_seed: dict[int, float] = field(default_factory=dict)
    tail_per_seed: dict[int, float] = field(default_factory=dict)
    stats: dict[str, Any] = field(default_factory=dict)
    errors: dict[int, str] = field(default_factory=dict)

    @property
    def condition_text(self) -> str:
        return ";".join(f"{key}={value}" for key, value in self.condition.items())

    def summary(self, values: dict[int, float]) -> dict[str, Optional[float]]:
        if not values:
            return {"mean": None, "min": None, "max": None}
        array = np.array(list(values.values()))
        return {"mean": float(array.mean()), "min": float(array.min()), "max": float(array.max())}

    def to_dict(self) -> dict[str, Any]:
        return {
            "condition": dict(self.condition),
            "map_per_seed": {str(seed): value for seed, value in sorted(self.per_seed.items())},
            "map": self.summary(self.per_seed),
            "tail_map_per_seed": {str(seed): value for seed, value in sorted(self.tail_per_seed.items())},
            "tail_map": self.summary(self.tail_per_seed),
            "stats": dict(self.stats),
            "errors": {str(seed): message for seed, message in sorted(self.errors.items())},
        }


@dataclass
class SweepTable:
    family: str
    rows: list[SweepRow] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "rows": [row.to_dict() for row in self.rows]}

    def to_csv(self) -> str:
        """Flat table: one line per grid point; per-seed values as ``seed:value`` tokens."""
        stat_keys = sorted({key for row in self.rows for key in row.stats})
        header = ["family", "condition", "seeds", "map_per_seed", "map_mean", "map_min", "map_max", "tail_map_mean"]
        header += stat_keys + ["error"]
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in self.rows:
            overall = row.summary(row.per_seed)
            tail = row.summary(row.tail_per_seed)
            writer.writerow(
                [
                    self.family,
                    row.condition_text,
                    " ".join(str(seed) for seed in sorted(row.per_seed)),
                    " ".join(f"{seed}:{value!r}" for seed, value in sorted(row.per_seed.items())),
                    _cell(overall["mean"]),
                    _cell(overall["min"]),
                    _cell(overall["max"]),
                    _cell(tail["mean"]),
                ]
                + [_cell(row.stats.get(key)) for key in stat_keys]
                + ["; ".join(f"seed {seed}: {message}" for seed, message in sorted(row.errors.items()))]
            )
        return buffer.getvalue()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class EvalReport:
    """Everything one run or sweep produced; ``to_dict`` is the machine-readable report."""

    command: str
    per_class_ap: dict[int, float] = field(default_factory=dict)
    mean_ap: Optional[float] = None
    tail_map: Optional[float] = None
    cost_stats: Optional[CostStats] = None
    thresholds: list[str] = field(default_factory=list)
    gate_recall: dict[str, float] = field(default_factory=dict)
    sweeps: list[SweepTable] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    config_snapshot: dict[str, Any] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        result: dict[str, Any] = {
            "command": self.command,
            "seeds": list(self.seeds),
            "config_snapshot": dict(self.config_snapshot),
        }
        if self.per_class_ap:
            result["per_class_ap"] = {str(class_id): value for class_id, value in sorted(self.per_class_ap.items())}
            result["map"] = self.mean_ap
            result["tail_map"] = self.tail_map
        if self.cost_stats is not None:
            result["cost_stats"] = self.cost_stats.to_dict()
        if self.thresholds:
            result["thresholds"] = list(self.thresholds)
        if self.gate_recall:
            result["gate_recall"] = dict(sorted(self.gate_recall.items()))
        if self.sweeps:
            result["sweeps"] = [table.to_dict() for table in self.sweeps]
        if self.artifacts:
            result["artifacts"] = dict(sorted(self.artifacts.items()))
        return result
