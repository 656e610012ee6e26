"""Desk-scale acceptance checks on the default synthetic configuration."""

import os
from typing import Optional

import numpy as np
import pytest

from cascade_feature_learner.__main__ import main
from cascade_feature_learner.cascade.inference import cascade_batch, gate_recall
from cascade_feature_learner.core.config import RunConfig
from cascade_feature_learner.core.orchestrator import Orchestrator, replace_pipeline
from cascade_feature_learner.datagen.synthetic import generate_synthetic
from cascade_feature_learner.evaluation.experiments import ExperimentSpec, run_experiment
from cascade_feature_learner.evaluation.metrics import average_precision
from cascade_feature_learner.evaluation.report import SweepRow
from cascade_feature_learner.models.mlp import batch_loss, gradients, init_mlp

SEEDS = (0, 1, 2, 3, 4)
REQUIRED_WINS = 4


def _sweep(family: str, grid: tuple[str, ...], config: Optional[RunConfig] = None) -> list[SweepRow]:
    report = run_experiment(ExperimentSpec(family, grid, SEEDS, config or RunConfig()))
    rows = report.sweeps[0].rows
    for row in rows:
        assert not row.errors, row.errors
    return rows


def _wins(better: dict[int, float], worse: dict[int, float], strict: bool = True) -> int:
    if strict:
        return sum(better[seed] > worse[seed] for seed in SEEDS)
    return sum(better[seed] >= worse[seed] for seed in SEEDS)


def _rescan_ap(scores: np.ndarray, relevant: np.ndarray, ids: list[str]) -> float:
    """Precision at every positive by rescanning all samples ranked at or above it."""
    found = []
    for i in np.flatnonzero(relevant):
        above = [
            j for j in range(len(scores)) if scores[j] > scores[i] or (scores[j] == scores[i] and ids[j] <= ids[i])
        ]
        found.append((len(above), int(relevant[above].sum()) / len(above)))
    found.sort()
    return float(np.array([precision for _, precision in found]).sum() / len(found))


class TestExactChecks:
    """Exact properties; fast enough to run without the acceptance flag."""

    def test_gradients_match_finite_differences(self) -> None:
        """Test analytic gradients of 20 random small networks against central differences."""
        epsilon = 1e-6
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            hidden = int(rng.integers(1, 3))
            dims = (int(rng.integers(2, 9)), *(int(rng.integers(2, 17)) for _ in range(hidden)), 4)
            model = init_mlp(dims, (1, 2, 3), seed=seed)
            features = rng.normal(size=(4, dims[0]))
            targets = rng.integers(0, 4, size=4)
            analytic = gradients(model, features, targets)
            for layer, layer_grad in enumerate(analytic):
                assert layer_grad is not None
                for index in np.ndindex(*model.weights[layer].shape):
                    original = model.weights[layer][index]
                    model.weights[layer][index] = original + epsilon
                    plus = batch_loss(model, features, targets)
                    model.weights[layer][index] = original - epsilon
                    minus = batch_loss(model, features, targets)
                    model.weights[layer][index] = original
                    numeric = (plus - minus) / (2 * epsilon)
                    assert abs(layer_grad[0][index] - numeric) <= 1e-4 * max(1.0, abs(numeric))

    def test_average_precision_matches_rescan(self) -> None:
        """Test average precision on 1,000 small random instances with ties, exactly."""
        rng = np.random.default_rng(8)
        for _ in range(1000):
            n = int(rng.integers(1, 13))
            scores = rng.integers(0, 4, size=n).astype(float)
            relevant = rng.random(n) < 0.5
            relevant[int(rng.integers(n))] = True
            ids = [f"s{k:02d}" for k in rng.permutation(n)]
            assert average_precision(scores, relevant, ids) == _rescan_ap(scores, relevant, ids)


@pytest.mark.acceptance
class TestCascadeAcceptance:
    """Cascade equivalence, cost and recall on the default synthetic data."""

    @staticmethod
    def _trained(seed: int = 0):  # type: ignore[no-untyped-def]
        config = RunConfig().with_seed(seed)
        dataset = generate_synthetic(config.gen).dataset
        orchestrator = Orchestrator(config)
        base = orchestrator.pretrain(dataset)
        tree = orchestrator.cluster(dataset, base)
        return orchestrator, dataset, orchestrator.train_hierarchy(tree, dataset, base)

    def test_open_gates_equal_leaf_scores(self) -> None:
        """Test bitwise equality with the leaf SVMs on 1,000 samples when every T is -inf."""
        _, dataset, ensemble = self._trained()
        features = dataset.features[:1000]
        scores, _ = cascade_batch(ensemble.with_thresholds([float("-inf")]), features)
        tree = ensemble.tree
        for j in range(1, tree.group_counts[-1] + 1):
            columns = [tree.classes.index(class_id) for class_id in tree.group(2, j)]
            assert np.array_equal(scores[:, columns], ensemble.node(2, j).svm_scores(features))

    def test_calibrated_cost_and_recall(self) -> None:
        """Test per-group recall, fewer samples per level-2 node, and monotone cost in T."""
        orchestrator, dataset, ensemble = self._trained()
        assert min(gate_recall(ensemble, dataset.split("val")).values()) >= 0.99
        evaluation = dataset.split("test")
        _, cost = orchestrator.infer(ensemble, evaluation)
        assert cost.n_b(2) < cost.n_b(1)
        calibrated = ensemble.thresholds[0]
        totals = [
            cascade_batch(ensemble.with_thresholds([calibrated + shift]), evaluation)[1].total_evaluations
            for shift in (-2.0, -1.0, 0.0, 0.5, 1.0, 2.0)
        ]
        assert all(b <= a for a, b in zip(totals, totals[1:]))


@pytest.mark.acceptance
class TestDirectionalFindings:
    """Orderings that must hold on at least four of five seeds."""

    def test_hierarchy_beats_flat(self) -> None:
        """Test two-level training against the flat model."""
        flat, two_level = _sweep("level-sweep", ("1", "1,4"))
        assert _wins(two_level.per_seed, flat.per_seed) >= REQUIRED_WINS

    def test_pseudo_uniform_helps_the_tail(self) -> None:
        """Test tail-half mAP of pseudo-uniform against random positive sampling."""
        rand_pos, pseudo_uniform = _sweep("sampling", ("rand_pos:0.25", "pseudo_uniform:0.25"))
        assert _wins(pseudo_uniform.tail_per_seed, rand_pos.tail_per_seed, strict=False) >= REQUIRED_WINS

    def test_uniform_batches_help_the_tail(self) -> None:
        """Test tail-half mAP of class-uniform batches against plain shuffling."""
        plain, uniform = _sweep("uniform-batches", ("plain", "uniform"))
        assert _wins(uniform.tail_per_seed, plain.tail_per_seed, strict=False) >= REQUIRED_WINS

    def test_visual_clustering_recovers_planted_groups(self) -> None:
        """Test planted-group recovery and the gap to random grouping."""
        visual, random = _sweep("clustering", ("visual", "random"))
        assert visual.stats["planted_recovered"] >= REQUIRED_WINS / len(SEEDS)
        assert _wins(visual.per_seed, random.per_seed) >= REQUIRED_WINS

    def test_frozen_features_trail_finetuning(self) -> None:
        """Test an all-frozen network against full finetuning."""
        config = RunConfig()
        all_frozen = str(len(config.train.hidden_dims) + 1)
        finetuned, frozen = _sweep("freeze", ("0", all_frozen))
        assert _wins(finetuned.per_seed, frozen.per_seed) >= REQUIRED_WINS

    def test_skipping_level_one_does_not_help(self) -> None:
        """Test the finetuning path 0>2 against 0>1>2."""
        config = replace_pipeline(RunConfig(), group_counts=(1, 4, 7))
        skipped, full = _sweep("strategy", ("0,2", "0,1,2"), config)
        assert _wins(full.per_seed, skipped.per_seed, strict=False) >= REQUIRED_WINS


@pytest.mark.acceptance
class TestDeterministicCli:
    """Byte-identical reports from repeated deterministic runs."""

    def test_chain_is_reproducible(self, tmp_path: str) -> None:
        """Test datagen, pretrain, cluster, train-hier, infer and eval twice with the same seed."""
        reports = []
        for name in ("first", "second"):
            run = os.path.join(tmp_path, name)
            common = ["--seed", "5", "--deterministic"]
            data = os.path.join(run, "dataset.ltf")
            model = os.path.join(run, "base.mlp")
            main(["datagen", *common, "--out", run])
            main(["pretrain", *common, "--data", data, "--out", run])
            main(["cluster", *common, "--data", data, "--model", model, "--out", run])
            tree = os.path.join(run, "hierarchy.txt")
            main(["train-hier", *common, "--data", data, "--model", model, "--tree", tree, "--out", run])
            main(["infer", *common, "--data", data, "--ensemble", os.path.join(run, "ensemble"), "--out", run])
            main(["eval", *common, "--data", data, "--scores", os.path.join(run, "scores.txt"), "--out", run])
            with open(os.path.join(run, "report.json"), "rb") as handle:
                reports.append(handle.read())
        assert reports[0] == reports[1]
