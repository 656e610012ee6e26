#!/usr/bin/env python3
"""
Cascade Feature Learner - CLI entry point

Usage: python -m cascade_feature_learner <command> [options]
"""

import argparse
import os
import sys
from typing import Any, NoReturn, Optional

# Check the interpreter before importing modules that need numpy
from .core.venv_checker import check_venv

check_venv()

from .cascade.ensemble import load_ensemble, save_ensemble
from .cascade.hier_train import StrategyPath
from .cascade.inference import load_scores, write_scores
from .core.config import RunConfig, apply_overrides, load_config_file
from .core.dataset import Dataset, format_float, load_dataset, save_dataset
from .core.orchestrator import Orchestrator
from .core.output_formatter import ReportFormatter
from .datagen.synthetic import generate_synthetic, write_truth
from .evaluation.experiments import FAMILIES, ExperimentSpec, run_experiment
from .evaluation.report import EvalReport
from .grouping.hierarchy import load_hierarchy, save_hierarchy
from .models.mlp import load_mlp, save_mlp

GROUPING_METHODS = ("visual", "confusion", "accuracy", "count", "scalar-file", "random", "taxonomy-file")

DATASET_FILE = "dataset.ltf"
TRUTH_FILE = "truth.txt"
MODEL_FILE = "base.mlp"
HIERARCHY_FILE = "hierarchy.txt"
ENSEMBLE_DIR = "ensemble"
SCORES_FILE = "scores.txt"


class UsageErrorParser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="Seed for data generation and training (overrides the config file)")
    common.add_argument(
        "--deterministic",
        action="store_true",
        help="Run single-threaded so results are bit-reproducible",
    )
    common.add_argument("--config", type=str, help="Flat key=value configuration file")
    common.add_argument("--out", type=str, default=".", help="Output directory (default: current directory)")
    common.add_argument("--debug", action="store_true", help="Print debug statements")
    return common


def parse_arguments(argv: Optional[list[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = UsageErrorParser(
        prog="python -m cascade_feature_learner",
        description="Long-tail feature learning and cascaded hierarchical classification",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s datagen --config gen.cfg --seed 7 --out run/
  %(prog)s pretrain --data run/dataset.ltf --out run/
  %(prog)s cluster --data run/dataset.ltf --model run/base.mlp --method visual --out run/
  %(prog)s train-hier --data run/dataset.ltf --model run/base.mlp --tree run/hierarchy.txt --out run/
  %(prog)s infer --data run/dataset.ltf --ensemble run/ensemble --out run/
  %(prog)s eval --data run/dataset.ltf --scores run/scores.txt --out run/
  %(prog)s experiment --family level-sweep --seeds 0 1 2 --deterministic --out sweeps/
        """,
    )
    common = _common_options()
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)

    commands.add_parser("datagen", parents=[common], help="Generate a synthetic long-tailed dataset")

    pretrain = commands.add_parser("pretrain", parents=[common], help="Train the base network on the pretrain split")
    pretrain.add_argument("--data", required=True, help="Dataset file (LTFV1)")

    cluster = commands.add_parser("cluster", parents=[common], help="Build the class hierarchy")
    cluster.add_argument("--data", required=True, help="Dataset file (LTFV1)")
    cluster.add_argument("--model", help="Base network; required by visual, confusion and accuracy")
    cluster.add_argument("--method", choices=GROUPING_METHODS, help="Grouping method (default: from the config)")
    cluster.add_argument("--group-counts", help="Comma-separated groups per level, e.g. '1,4,7'")

    train_hier = commands.add_parser("train-hier", parents=[common], help="Train one node model per class group")
    train_hier.add_argument("--data", required=True, help="Dataset file (LTFV1)")
    train_hier.add_argument("--model", required=True, help="Base network")
    train_hier.add_argument("--tree", required=True, help="Hierarchy file ('l j: ids' lines)")
    train_hier.add_argument("--strategy", help="Strategy path, e.g. '0,1,2' or '0>2' (default: from the config)")
    train_hier.add_argument(
        "--thresholds",
        help="Comma-separated thresholds for levels 1..L-1; 'auto' calibrates a level on the validation split",
    )

    calibrate = commands.add_parser("calibrate", parents=[common], help="Calibrate gate thresholds for a recall")
    calibrate.add_argument("--data", required=True, help="Dataset file (LTFV1)")
    calibrate.add_argument("--ensemble", required=True, help="Ensemble directory")

    infer = commands.add_parser("infer", parents=[common], help="Score samples with the cascade")
    infer.add_argument("--data", required=True, help="Dataset file (LTFV1)")
    infer.add_argument("--ensemble", required=True, help="Ensemble directory")
    infer.add_argument("--split", help="Split to score (default: the evaluation split)")

    evaluate = commands.add_parser("eval", parents=[common], help="Compute per-class AP and mAP of a score file")
    evaluate.add_argument("--data", required=True, help="Dataset file (LTFV1)")
    evaluate.add_argument("--scores", required=True, help="Score file written by infer")
    evaluate.add_argument("--ensemble", help="Ensemble directory; adds thresholds and gate recall to the report")

    experiment = commands.add_parser("experiment", parents=[common], help="Run a multi-seed sweep family")
    experiment.add_argument("--family", required=True, choices=FAMILIES, help="Sweep family")
    experiment.add_argument("--grid", nargs="+", help="Grid entries (default: the family's standard grid)")
    experiment.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4], help="Seeds (default: 0-4)")
    experiment.add_argument("--data", help="Dataset file instead of generating synthetic data per seed")
    experiment.add_argument("--truth", help="Planted class -> group file for the given dataset")

    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    overrides: dict[str, str] = load_config_file(args.config) if args.config else {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return apply_overrides(RunConfig(), overrides)


def parse_thresholds(text: Optional[str], num_levels: int) -> Optional[list[Optional[float]]]:
    if text is None:
        return None
    values: list[Optional[float]] = []
    for token in (part.strip() for part in text.split(",") if part.strip()):
        if token.lower() == "auto":
            values.append(None)
            continue
        try:
            values.append(float(token))
        except ValueError as exc:
            raise ValueError(f"Invalid threshold '{token}' (expected a number, -inf or auto)") from exc
    if len(values) != num_levels - 1:
        raise ValueError(f"a {num_levels}-level tree needs {num_levels - 1} threshold(s), got {len(values)}")
    return values


def parse_group_counts(text: Optional[str]) -> Optional[tuple[int, ...]]:
    if text is None:
        return None
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ValueError(f"Invalid group counts '{text}' (expected comma-separated integers)") from exc


def _report(command: str, config: RunConfig, artifacts: dict[str, str]) -> EvalReport:
    return EvalReport(
        command=command,
        seeds=[config.train.seed],
        config_snapshot=config.snapshot(),
        artifacts=artifacts,
    )


def _aligned_scores(dataset: Dataset, split: str, path: str) -> Any:
    """Score rows of ``path`` reordered to the split's sample order."""
    ids, scores = load_scores(path)
    evaluation = dataset.split(split)
    if sorted(ids) != sorted(evaluation.ids):
        raise ValueError(f"score file {path} does not cover exactly the samples of split '{split}'")
    if scores.shape[1] != dataset.num_classes:
        raise ValueError(f"score file {path} has {scores.shape[1]} columns, dataset has {dataset.num_classes} classes")
    position = {sample_id: k for k, sample_id in enumerate(ids)}
    return scores[[position[sample_id] for sample_id in evaluation.ids]]


def run_command(args: argparse.Namespace) -> EvalReport:
    """Execute one subcommand, writing its artifacts under ``args.out``."""
    config = build_config(args)
    out = args.out
    os.makedirs(out, exist_ok=True)
    deterministic = args.deterministic

    if args.command == "datagen":
        generated = generate_synthetic(config.gen)
        save_dataset(generated.dataset, os.path.join(out, DATASET_FILE))
        write_truth(os.path.join(out, TRUTH_FILE), generated.class_to_group, config.gen)
        return _report("datagen", config, {"dataset": DATASET_FILE, "truth": TRUTH_FILE})

    if args.command == "experiment":
        spec = ExperimentSpec(
            family=args.family,
            grid=tuple(args.grid or ()),
            seeds=tuple(args.seeds),
            config=config,
            dataset_path=args.data,
            truth_path=args.truth,
        )
        return run_experiment(spec, debug=args.debug, deterministic=deterministic)

    dataset = load_dataset(args.data)
    method = getattr(args, "method", None)
    orchestrator = Orchestrator(config, debug=args.debug, deterministic=deterministic, grouping_method=method)

    if args.command == "pretrain":
        base = orchestrator.pretrain(dataset)
        save_mlp(base, os.path.join(out, MODEL_FILE))
        return _report("pretrain", config, {"model": MODEL_FILE})

    if args.command == "cluster":
        model = load_mlp(args.model) if args.model else None
        tree = orchestrator.cluster(dataset, model, parse_group_counts(args.group_counts))
        save_hierarchy(tree, os.path.join(out, HIERARCHY_FILE))
        return _report("cluster", config, {"hierarchy": HIERARCHY_FILE})

    if args.command == "train-hier":
        tree = load_hierarchy(args.tree, dataset.class_ids)
        strategy = StrategyPath.parse(args.strategy).levels if args.strategy else None
        ensemble = orchestrator.train_hierarchy(
            tree,
            dataset,
            load_mlp(args.model),
            parse_thresholds(args.thresholds, tree.num_levels),
            strategy,
        )
        save_ensemble(ensemble, os.path.join(out, ENSEMBLE_DIR))
        report = _report("train-hier", config, {"ensemble": ENSEMBLE_DIR})
        report.thresholds = [format_float(threshold) for threshold in ensemble.thresholds]
        return report

    if args.command == "calibrate":
        ensemble = orchestrator.calibrate(load_ensemble(args.ensemble), dataset)
        save_ensemble(ensemble, os.path.join(out, ENSEMBLE_DIR))
        report = _report("calibrate", config, {"ensemble": ENSEMBLE_DIR})
        report.thresholds = [format_float(threshold) for threshold in ensemble.thresholds]
        return report

    if args.command == "infer":
        ensemble = load_ensemble(args.ensemble)
        data = dataset.split(args.split or config.pipeline.eval_split)
        scores, cost = orchestrator.infer(ensemble, data)
        write_scores(os.path.join(out, SCORES_FILE), data.ids, scores)
        report = _report("infer", config, {"scores": SCORES_FILE})
        report.cost_stats = cost
        report.thresholds = [format_float(threshold) for threshold in ensemble.thresholds]
        return report

    if args.command == "eval":
        scores = _aligned_scores(dataset, config.pipeline.eval_split, args.scores)
        ensemble = load_ensemble(args.ensemble) if args.ensemble else None
        return orchestrator.evaluate(dataset, scores, ensemble=ensemble, command="eval")

    raise ValueError(f"Unknown command: {args.command}")


def main(argv: Optional[list[str]] = None) -> None:
    """Main entry point."""
    args = parse_arguments(argv)

    try:
        report = run_command(args)
        formatter = ReportFormatter(debug=args.debug)
        formatter.write(report, args.out)
        if args.debug:
            print(formatter.format_json(report))
    except (RuntimeError, OSError, ValueError) as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    main()
