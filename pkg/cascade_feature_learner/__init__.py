"""Cascade Feature Learner - long-tail aware feature learning and cascaded hierarchical classification."""

from typing import Any, Optional, Sequence

from .core.config import RunConfig
from .core.dataset import Dataset, load_dataset
from .core.interfaces import TaskExecutor
from .core.orchestrator import Orchestrator, PipelineResult
from .core.output_formatter import ReportFormatter
from .datagen.synthetic import generate_synthetic
from .evaluation.experiments import ExperimentSpec, run_experiment
from .executors import PoolExecutor, SerialExecutor


def run_pipeline(
    dataset: Dataset,
    config: Optional[RunConfig] = None,
    grouping_method: Optional[str] = None,
    debug: bool = False,
    deterministic: bool = True,
) -> PipelineResult:
    """
    Convenience function to run the full pipeline on one dataset.

    Args:
        dataset: Dataset with pretrain, train, val and test splits
        config: Run configuration (defaults when omitted)
        grouping_method: Grouping method name, overriding the configured one
        debug: Enable debug output
        deterministic: Run single-threaded for bit-reproducible results

    Returns:
        Base model, hierarchy, trained ensemble, evaluation report and the evaluation-split scores
    """
    orchestrator = Orchestrator(config, debug=debug, deterministic=deterministic, grouping_method=grouping_method)
    return orchestrator.run(dataset)


def run_pipeline_as_dict(
    dataset_path: Optional[str] = None,
    config: Optional[RunConfig] = None,
    grouping_method: Optional[str] = None,
    debug: bool = False,
) -> dict[str, Any]:
    """
    Run the pipeline and return the evaluation report as a Python dictionary.

    Synthetic data is generated from ``config.gen`` when no dataset path is given.

    Raises:
        ValueError: If the dataset file or configuration is invalid
    """
    config = config or RunConfig()
    dataset = load_dataset(dataset_path) if dataset_path else generate_synthetic(config.gen).dataset
    return run_pipeline(dataset, config, grouping_method, debug).report.to_dict()


def run_sweep(
    family: str,
    grid: Sequence[str] = (),
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    config: Optional[RunConfig] = None,
    debug: bool = False,
    pretty_print: bool = False,
) -> str:
    """
    Convenience function to run one experiment family and return its report as JSON.

    Args:
        family: Sweep family, e.g. "level-sweep" or "sampling"
        grid: Grid entries (the family's standard grid when empty)
        seeds: Seeds to repeat every grid point with
        config: Run configuration (defaults when omitted)
        debug: Enable debug output
        pretty_print: Format JSON output with indentation
    """
    spec = ExperimentSpec(family, tuple(grid), tuple(seeds), config or RunConfig())
    report = run_experiment(spec, debug=debug)
    return ReportFormatter(debug=debug).format_json(report, pretty_print=pretty_print)


__all__ = [
    "Dataset",
    "ExperimentSpec",
    "Orchestrator",
    "PipelineResult",
    "PoolExecutor",
    "ReportFormatter",
    "RunConfig",
    "SerialExecutor",
    "TaskExecutor",
    "main",
    "run_pipeline",
    "run_pipeline_as_dict",
    "run_sweep",
]


def main() -> None:
    """CLI entry point for installed package (used by cascade-feature-learner command)."""
    # pylint: disable=import-outside-toplevel
    from .__main__ import main as cli_main

    cli_main()
