import json
import os
from typing import Any

from ..evaluation.report import EvalReport


class ReportFormatter:
    """Handles formatting and writing of evaluation reports."""

    def __init__(self, debug: bool = False):
        self.debug = debug

    def format_json(self, report: EvalReport | dict[str, Any], pretty_print: bool = True) -> str:
        """Format a report as JSON with sorted keys."""
        data = report.to_dict() if isinstance(report, EvalReport) else report
        if self.debug:
            data = self.create_excerpt(data)
        if pretty_print:
            return json.dumps(data, indent=2, sort_keys=True)
        return json.dumps(data, sort_keys=True)

    def create_excerpt(self, report: dict[str, Any], max_classes: int = 3) -> dict[str, Any]:
        """Create an excerpt of the per-class APs for debug mode."""
        excerpt = {key: value for key, value in report.items() if key != "per_class_ap"}
        if "per_class_ap" not in report:
            return excerpt

        per_class = report["per_class_ap"]
        total = len(per_class)
        if total <= max_classes:
            excerpt["per_class_ap"] = per_class
        else:
            excerpt["per_class_ap"] = dict(list(per_class.items())[:max_classes])
            excerpt["_excerpt_info"] = {
                "total_classes": total,
                "shown": max_classes,
                "note": f"Showing {max_classes} of {total} per-class APs (debug mode excerpt)",
            }
        return excerpt

    def write(self, report: EvalReport, out_dir: str) -> list[str]:
        """Write the full ``report.json`` and one ``<family>.csv`` per sweep table; returns the written paths."""
        os.makedirs(out_dir, exist_ok=True)
        written = []
        report_path = os.path.join(out_dir, "report.json")
        with open(report_path, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(report_path)
        for table in report.sweeps:
            csv_path = os.path.join(out_dir, f"{table.family}.csv")
            with open(csv_path, "w", encoding="utf-8", newline="") as handle:
                handle.write(table.to_csv())
            written.append(csv_path)
        return written
