import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel

from cjs.adaptation.classifier.classifier import (
    LinearOvrModel,
    assemble_joint_subspaces,
    predict,
    train_ovr_svm,
)
from cjs.adaptation.clustering.clustering import (
    AnchorSubspace,
    ClusteringParams,
    build_anchor_subspaces,
)
from cjs.adaptation.dataset.dataset import (
    DomainDataset,
    LabelMatrix,
    load_dataset,
    merge_domains,
    one_hot_encode,
)
from cjs.adaptation.distance.distance import AffinityPair, build_affinities, split_by_class
from cjs.adaptation.labeling.labeling import LabelingProblem, LabelingResult, label_anchors
from cjs.exceptions import ConfigError, LengthMismatch, UnlabeledTargetNoScore
from cjs.settings import PipelineConfig, with_updates

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
SWEEP_PARAMS = ("gamma", "N")


class EvaluationReport(BaseModel):
    schema_version: int = REPORT_SCHEMA_VERSION
    num_classes: int
    scored: bool
    per_run_accuracy: List[float]
    mean: Optional[float]
    std: Optional[float]
    baseline_accuracy: List[float]
    baseline_mean: Optional[float]
    confusion: List[List[int]]
    num_anchors: List[int]
    labeling_iterations: List[int]
    labeling_converged: List[bool]
    predictions: List[int]
    wall_time_s: float
    config_echo: PipelineConfig


@dataclass
class Adaptation:
    """Everything the training half of one run produces."""

    model: LinearOvrModel
    anchors: List[AnchorSubspace]
    anchor_labels: LabelMatrix
    affinities: AffinityPair
    labeling: LabelingResult


@dataclass
class RunResult:
    run_index: int
    seed: int
    predictions: np.ndarray
    anchor_labels: np.ndarray
    labeling_iterations: int
    labeling_converged: bool
    accuracy: Optional[float] = None
    confusion: Optional[np.ndarray] = None
    baseline_accuracy: Optional[float] = None


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: int
    mean: Optional[float]
    std: Optional[float]
    baseline_mean: Optional[float]


def evaluate(
    predictions: Sequence[int], truth: Sequence[int], num_classes: Optional[int] = None
) -> Tuple[float, np.ndarray]:
    """Accuracy and the truth x prediction count matrix."""
    predictions = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predictions.shape != truth.shape:
        raise LengthMismatch(
            f"{predictions.shape[0]} predictions for {truth.shape[0]} true labels"
        )
    if num_classes is None:
        num_classes = int(max(predictions.max(initial=-1), truth.max(initial=-1))) + 1
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (truth, predictions), 1)
    accuracy = float(np.mean(predictions == truth)) if truth.size else 0.0
    return accuracy, confusion


def score_predictions(
    predictions: np.ndarray, target: DomainDataset, num_classes: int
) -> Tuple[float, np.ndarray]:
    if not target.is_labeled:
        raise UnlabeledTargetNoScore(
            f"Target {target.domain_tag!r} has no labels, predictions cannot be scored"
        )
    return evaluate(predictions, target.labels, num_classes)


def parse_domain_path(spec: str) -> Tuple[str, Optional[str]]:
    """Split ``FEATURES[:LABELS]`` into its two paths."""
    features, _, labels = spec.partition(":")
    if not features:
        raise ConfigError(f"Domain path {spec!r} names no feature file")
    return features, labels or None


def load_domains(specs: Sequence[str], config: PipelineConfig, role: str) -> DomainDataset:
    if not specs:
        raise ConfigError(f"At least one {role} path is required")
    datasets = []
    for spec in specs:
        features, labels = parse_domain_path(spec)
        datasets.append(
            load_dataset(features, labels, "", config.label_base, config.l2_normalize)
        )
    return merge_domains(datasets)


def load_experiment(config: PipelineConfig) -> Tuple[DomainDataset, DomainDataset]:
    source = load_domains(config.sources, config, "source")
    target = load_domains(config.targets, config, "target")
    if not source.is_labeled:
        raise ConfigError("Source domains must carry labels")
    return source, target


def adapt(
    source: DomainDataset,
    target: DomainDataset,
    num_classes: int,
    config: PipelineConfig,
    seed: int,
    n_jobs: int = 1,
) -> Adaptation:
    """Anchors, anchor labels and the one-vs-rest model for one run."""
    sources = split_by_class(source, num_classes, config.rank_tol)
    params = ClusteringParams(config.gamma, config.N, seed, config.max_kmeans_iters)
    anchors = build_anchor_subspaces(target.features, params, config.rank_tol, n_jobs)

    affinities = build_affinities(sources, anchors, config.sigma, n_jobs)
    problem = LabelingProblem(affinities, config.rho, config.mu, config.max_iter, config.tol)
    anchor_labels, labeling = label_anchors(problem)

    joint = assemble_joint_subspaces(sources, anchors, anchor_labels)
    model = train_ovr_svm(
        joint,
        source,
        target,
        config.reg_c,
        config.svm_tol,
        config.svm_max_iter,
        seed,
        n_jobs,
    )
    return Adaptation(model, anchors, anchor_labels, affinities, labeling)


def train_source_only(
    source: DomainDataset,
    num_classes: int,
    config: PipelineConfig,
    seed: int,
    n_jobs: int = 1,
) -> LinearOvrModel:
    sources = split_by_class(source, num_classes, config.rank_tol)
    joint = assemble_joint_subspaces(sources, [], one_hot_encode([], num_classes))
    return train_ovr_svm(
        joint, source, source, config.reg_c, config.svm_tol, config.svm_max_iter, seed, n_jobs
    )


def run_single(
    source: DomainDataset,
    target: DomainDataset,
    num_classes: int,
    config: PipelineConfig,
    run_index: int,
    n_jobs: int = 1,
) -> RunResult:
    seed = config.seed + run_index
    adaptation = adapt(source, target, num_classes, config, seed, n_jobs)
    predictions = predict(adaptation.model, target.features)
    result = RunResult(
        run_index=run_index,
        seed=seed,
        predictions=predictions,
        anchor_labels=adaptation.anchor_labels.class_indices(),
        labeling_iterations=adaptation.labeling.iterations,
        labeling_converged=adaptation.labeling.converged,
    )

    try:
        result.accuracy, result.confusion = score_predictions(predictions, target, num_classes)
    except UnlabeledTargetNoScore as e:
        logger.warning(str(e))
        return result

    baseline = train_source_only(source, num_classes, config, seed, n_jobs)
    result.baseline_accuracy, _ = score_predictions(
        predict(baseline, target.features), target, num_classes
    )
    logger.info(
        f"Run {run_index} (seed {seed}): accuracy {result.accuracy:.4f}, "
        f"source-only {result.baseline_accuracy:.4f}"
    )
    return result


def _mean_std(values: List[float]) -> Tuple[Optional[float], Optional[float]]:
    if not values:
        return None, None
    return float(np.mean(values)), float(np.std(values))


def run_pipeline(
    config: PipelineConfig,
    source: Optional[DomainDataset] = None,
    target: Optional[DomainDataset] = None,
) -> EvaluationReport:
    """Repeat the adaptation ``config.runs`` times and aggregate the scores.

    Datasets are loaded from the configured paths unless given. Run i uses
    seed ``config.seed + i``; runs go to a joblib pool when ``n_jobs`` allows.
    """
    started = time.perf_counter()
    if source is None or target is None:
        source, target = load_experiment(config)
    num_classes = source.num_classes
    target.check_classes(num_classes)

    # parallelize over runs when there are several, otherwise inside the run
    outer_jobs = config.n_jobs if config.runs > 1 else 1
    inner_jobs = 1 if config.runs > 1 else config.n_jobs
    results = Parallel(n_jobs=outer_jobs)(
        delayed(run_single)(source, target, num_classes, config, i, inner_jobs)
        for i in range(config.runs)
    )

    scored = all(r.accuracy is not None for r in results)
    accuracies = [r.accuracy for r in results] if scored else []
    baselines = [r.baseline_accuracy for r in results] if scored else []
    mean, std = _mean_std(accuracies)
    last = results[-1]

    report = EvaluationReport(
        num_classes=num_classes,
        scored=scored,
        per_run_accuracy=accuracies,
        mean=mean,
        std=std,
        baseline_accuracy=baselines,
        baseline_mean=_mean_std(baselines)[0],
        confusion=last.confusion.tolist() if scored else [],
        num_anchors=[int(r.anchor_labels.shape[0]) for r in results],
        labeling_iterations=[r.labeling_iterations for r in results],
        labeling_converged=[r.labeling_converged for r in results],
        predictions=last.predictions.tolist(),
        wall_time_s=time.perf_counter() - started,
        config_echo=config,
    )
    if scored:
        logger.info(
            f"{config.runs} runs: mean accuracy {mean:.4f} +/- {std:.4f}, "
            f"source-only {report.baseline_mean:.4f}"
        )
    return report


def sweep(
    config: PipelineConfig,
    param: str,
    values: Sequence[int],
    source: Optional[DomainDataset] = None,
    target: Optional[DomainDataset] = None,
) -> List[SweepRow]:
    """One full evaluation per value of ``gamma`` or ``N``."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"Can only sweep {' or '.join(SWEEP_PARAMS)}, got {param!r}")
    if source is None or target is None:
        source, target = load_experiment(config)

    rows = []
    for value in values:
        report = run_pipeline(with_updates(config, **{param: int(value)}), source, target)
        rows.append(SweepRow(param, int(value), report.mean, report.std, report.baseline_mean))
        logger.info(f"Sweep {param}={value}: mean accuracy {report.mean}")
    return rows
