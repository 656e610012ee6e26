from .metrics import average_precision, mean_ap, subset_map, tail_classes
from .report import EvalReport, SweepRow, SweepTable

__all__ = [
    "EvalReport",
    "SweepRow",
    "SweepTable",
    "average_precision",
    "mean_ap",
    "subset_map",
    "tail_classes",
]
