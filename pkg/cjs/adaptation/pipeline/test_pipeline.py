import os
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_array_equal

from cjs.adaptation.dataset.dataset import DomainDataset, save_dataset
from cjs.adaptation.pipeline.pipeline import (
    adapt,
    evaluate,
    parse_domain_path,
    run_pipeline,
    score_predictions,
    sweep,
)
from cjs.adaptation.pipeline.synth import synth_generate
from cjs.exceptions import ConfigError, LengthMismatch, UnlabeledTargetNoScore
from cjs.settings import build_config


def small_domains(seed=0):
    return synth_generate(num_classes=3, dim=12, subspace_dim=2, samples=40, seed=seed)


class TestEvaluate(unittest.TestCase):
    def test_identical(self):
        accuracy, confusion = evaluate([0, 1, 2, 1], [0, 1, 2, 1])
        self.assertEqual(accuracy, 1.0)
        assert_array_equal(confusion, np.diag([1, 2, 1]))

    def test_disjoint(self):
        accuracy, _ = evaluate([1, 0], [0, 1])
        self.assertEqual(accuracy, 0.0)

    def test_hand_count(self):
        accuracy, confusion = evaluate([0, 1, 0, 0], [0, 1, 1, 0])
        self.assertEqual(accuracy, 0.75)
        self.assertEqual(confusion[1][0], 1)
        assert_array_equal(confusion.sum(axis=1), [2, 2])

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatch):
            evaluate([0, 1], [0])

    def test_unlabeled_target(self):
        source, target = small_domains()
        unlabeled = DomainDataset(target.features)
        with self.assertRaises(UnlabeledTargetNoScore):
            score_predictions(np.zeros(target.features.n, dtype=int), unlabeled, 3)


class TestDomainPaths(unittest.TestCase):
    def test_parse(self):
        self.assertEqual(parse_domain_path("x.csv:y.csv"), ("x.csv", "y.csv"))
        self.assertEqual(parse_domain_path("x.csv"), ("x.csv", None))
        with self.assertRaises(ConfigError):
            parse_domain_path(":y.csv")


class TestRunPipeline(unittest.TestCase):
    def test_synthetic_benchmark(self):
        source, target = synth_generate(seed=0)
        report = run_pipeline(build_config({"runs": 20}), source, target)
        self.assertTrue(report.scored)
        self.assertEqual(len(report.per_run_accuracy), 20)
        self.assertGreaterEqual(report.mean, 0.90)
        self.assertEqual(len(report.baseline_accuracy), 20)
        self.assertAlmostEqual(report.mean, float(np.mean(report.per_run_accuracy)), delta=1e-12)
        self.assertAlmostEqual(report.std, float(np.std(report.per_run_accuracy)), delta=1e-12)
        assert_array_equal(np.sum(report.confusion, axis=1), [100, 100, 100, 100])

    def test_gain_over_source_only_on_flipped_target(self):
        # target classes keep their subspaces, half their coordinates change sign
        source, target = synth_generate(subspace_dim=4, flip_axes=2, seed=0)
        report = run_pipeline(build_config({"runs": 10, "reg_c": 10.0}), source, target)
        self.assertLess(report.baseline_mean, 0.90)
        self.assertGreaterEqual(report.mean, report.baseline_mean + 0.10)

    def test_single_run_has_zero_std(self):
        source, target = small_domains()
        report = run_pipeline(build_config({"runs": 1}), source, target)
        self.assertEqual(report.std, 0.0)

    def test_deterministic(self):
        source, target = small_domains(seed=1)
        config = build_config({"runs": 2, "seed": 5})
        first = run_pipeline(config, source, target).model_dump()
        second = run_pipeline(config, source, target).model_dump()
        first.pop("wall_time_s")
        second.pop("wall_time_s")
        self.assertEqual(first, second)

    def test_parallel_runs_match_serial(self):
        source, target = small_domains(seed=2)
        serial = run_pipeline(build_config({"runs": 2}), source, target)
        pooled = run_pipeline(build_config({"runs": 2, "n_jobs": 2}), source, target)
        self.assertEqual(serial.per_run_accuracy, pooled.per_run_accuracy)
        self.assertEqual(serial.predictions, pooled.predictions)

    def test_unlabeled_target_gives_predictions_only(self):
        source, target = small_domains()
        report = run_pipeline(build_config({"runs": 1}), source, DomainDataset(target.features))
        self.assertFalse(report.scored)
        self.assertIsNone(report.mean)
        self.assertEqual(len(report.predictions), target.features.n)

    def test_class_permutation(self):
        source, target = small_domains(seed=3)
        perm = np.array([2, 0, 1])
        permuted_source = DomainDataset(source.features, perm[source.labels])
        permuted_target = DomainDataset(target.features, perm[target.labels])
        config = build_config({"runs": 1})
        original = run_pipeline(config, source, target)
        permuted = run_pipeline(config, permuted_source, permuted_target)
        self.assertAlmostEqual(original.mean, permuted.mean, delta=0.02)

    def test_multi_source_paths_are_merged(self):
        source, target = small_domains()
        with tempfile.TemporaryDirectory() as tmpdir:
            halves = [np.arange(0, 120, 2), np.arange(1, 120, 2)]
            specs = []
            for i, half in enumerate(halves):
                part = DomainDataset(source.features.take(half), source.labels[half])
                features = os.path.join(tmpdir, f"source{i}.csv")
                labels = os.path.join(tmpdir, f"source{i}_labels.csv")
                save_dataset(part, features, labels)
                specs.append(f"{features}:{labels}")
            target_features = os.path.join(tmpdir, "target.csv")
            target_labels = os.path.join(tmpdir, "target_labels.csv")
            save_dataset(target, target_features, target_labels)

            config = build_config(
                {"runs": 1, "sources": specs, "targets": [f"{target_features}:{target_labels}"]}
            )
            report = run_pipeline(config)
        self.assertEqual(report.num_classes, 3)
        self.assertEqual(report.config_echo.sources, specs)
        self.assertEqual(int(np.sum(report.confusion)), 120)

    def test_missing_sources(self):
        with self.assertRaises(ConfigError):
            run_pipeline(build_config({"runs": 1}))


class TestScaleInvariance(unittest.TestCase):
    def test_anchor_labels_unchanged_by_scaling(self):
        source, target = synth_generate(num_classes=3, dim=20, subspace_dim=2, samples=60, seed=4)
        config = build_config({"runs": 1})
        plain = adapt(source, target, 3, config, seed=0)
        scaled = adapt(
            source.with_features(source.features.scaled(4.0)),
            target.with_features(target.features.scaled(4.0)),
            3,
            config,
            seed=0,
        )
        self.assertEqual(len(plain.anchors), len(scaled.anchors))
        assert_array_equal(
            plain.anchor_labels.class_indices(), scaled.anchor_labels.class_indices()
        )


class TestSweep(unittest.TestCase):
    def test_rows_per_value(self):
        source, target = small_domains()
        rows = sweep(build_config({"runs": 1}), "gamma", [10, 20], source, target)
        self.assertEqual([(r.param, r.value) for r in rows], [("gamma", 10), ("gamma", 20)])
        self.assertTrue(all(0.0 <= r.mean <= 1.0 for r in rows))

    def test_rejects_other_params(self):
        source, target = small_domains()
        with self.assertRaises(ConfigError):
            sweep(build_config({"runs": 1}), "rho", [1], source, target)


if __name__ == "__main__":
    unittest.main()
