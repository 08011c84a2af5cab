import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from cjs import __version__
from cjs.adaptation.classifier.classifier import load_model, predict, save_model
from cjs.adaptation.dataset.dataset import save_dataset
from cjs.adaptation.distance.distance import class_distance_matrix
from cjs.adaptation.pipeline.pipeline import adapt, load_domains, load_experiment, run_pipeline
from cjs.adaptation.pipeline.synth import synth_generate
from cjs.exceptions import CJSError, UnlabeledTargetNoScore
from cjs.reporting import (
    DEFAULT_LOG_DIR,
    RunLogger,
    format_report,
    write_csv,
    write_labels,
    write_matrix,
    write_report,
)
from cjs.settings import PipelineConfig, resolve_config
from cjs.sweep import SWEEP_CSV_HEADER, SweepManager

logger = logging.getLogger(__name__)

# PipelineConfig fields that also exist as command-line flags
CONFIG_FLAGS = (
    "gamma",
    "N",
    "sigma",
    "rho",
    "mu",
    "tol",
    "max_iter",
    "reg_c",
    "runs",
    "seed",
    "n_jobs",
    "label_base",
    "l2_normalize",
    "output",
    "sources",
    "targets",
)


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    flags: Dict[str, Any] = {
        field: getattr(args, field, None) for field in CONFIG_FLAGS
    }
    return resolve_config(args.config, flags, args.overrides or [])


def _run(args: argparse.Namespace, config: PipelineConfig) -> str:
    report = run_pipeline(config)
    print(format_report(report))
    if config.output:
        write_report(report, config.output)
    return f"mean accuracy {report.mean}" if report.scored else "predictions only"


def _sweep(args: argparse.Namespace, config: PipelineConfig) -> str:
    manager = SweepManager(args.param, args.values)
    rows = SweepManager.to_rows(manager.run(config))
    if args.csv:
        write_csv(args.csv, SWEEP_CSV_HEADER, rows)
    else:
        print(",".join(SWEEP_CSV_HEADER))
        for row in rows:
            print(",".join(str(cell) for cell in row))
    return f"{len(rows)} sweep points"


def _synth(args: argparse.Namespace, config: PipelineConfig) -> str:
    source, target = synth_generate(
        num_classes=args.classes,
        dim=args.dim,
        subspace_dim=args.subspace_dim,
        samples=args.samples,
        angle=args.angle,
        noise=args.noise,
        seed=config.seed,
        flip_axes=args.flip_axes,
    )
    os.makedirs(args.out, exist_ok=True)
    for role, dataset in (("source", source), ("target", target)):
        save_dataset(
            dataset,
            os.path.join(args.out, f"{role}_features.csv"),
            os.path.join(args.out, f"{role}_labels.csv"),
            config.label_base,
        )
    return f"Synthetic domains written to {args.out}"


def _train(args: argparse.Namespace, config: PipelineConfig) -> str:
    source, target = load_experiment(config)
    adaptation = adapt(source, target, source.num_classes, config, config.seed, config.n_jobs)
    save_model(adaptation.model, args.model)
    return f"Model with {len(adaptation.anchors)} anchors written to {args.model}"


def _predict(args: argparse.Namespace, config: PipelineConfig) -> str:
    model = load_model(args.model)
    target = load_domains(config.targets, config, "target")
    predictions = predict(model, target.features)
    if args.out:
        write_labels(args.out, predictions, config.label_base)
    else:
        for label in predictions:
            print(int(label) + config.label_base)
    return f"{predictions.shape[0]} samples labeled"


def _distances(args: argparse.Namespace, config: PipelineConfig) -> str:
    source, target = load_experiment(config)
    if not target.is_labeled:
        raise UnlabeledTargetNoScore("Class distances need target labels")
    distances = class_distance_matrix(
        source, target, source.num_classes, config.rank_tol, args.normalize, config.n_jobs
    )
    if args.csv:
        write_matrix(args.csv, distances)
    else:
        with np.printoptions(precision=4, suppress=True):
            print(distances)
    return f"{distances.shape[0]}x{distances.shape[1]} distance matrix"


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration")
    group.add_argument("--config", help="JSON file of configuration values")
    group.add_argument(
        "--set",
        dest="overrides",
        action="append",
        metavar="NAME=VALUE",
        help="override any configuration field",
    )
    group.add_argument("--log-dir", default=DEFAULT_LOG_DIR)
    group.add_argument(
        "--source", dest="sources", action="append", metavar="FEATURES[:LABELS]"
    )
    group.add_argument(
        "--target", dest="targets", action="append", metavar="FEATURES[:LABELS]"
    )
    group.add_argument("--gamma", type=int)
    group.add_argument("--N", type=int)
    group.add_argument("--sigma")
    group.add_argument("--rho", type=float)
    group.add_argument("--mu", type=float)
    group.add_argument("--tol", type=float)
    group.add_argument("--max-iter", type=int)
    group.add_argument("--reg-c", type=float)
    group.add_argument("--runs", type=int)
    group.add_argument("--seed", type=int)
    group.add_argument("--n-jobs", type=int)
    group.add_argument("--label-base", type=int, choices=(0, 1))
    group.add_argument("--l2-normalize", action="store_true", default=None)
    group.add_argument("--output", help="report JSON path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cjs", description="Domain adaptation with compact joint subspaces"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="full pipeline over repeated runs")
    run.set_defaults(func=_run)

    sweep = commands.add_parser("sweep", help="evaluate a range of gamma or N values")
    sweep.add_argument("--param", required=True, choices=("gamma", "N"))
    sweep.add_argument("--values", required=True, help="5,10,20 or start:stop:step")
    sweep.add_argument("--csv")
    sweep.set_defaults(func=_sweep)

    synth = commands.add_parser("synth", help="write a synthetic source/target pair")
    synth.add_argument("--out", required=True)
    synth.add_argument("--classes", type=int, default=4)
    synth.add_argument("--dim", type=int, default=50)
    synth.add_argument("--subspace-dim", type=int, default=3)
    synth.add_argument("--samples", type=int, default=100)
    synth.add_argument("--angle", type=float, default=0.3)
    synth.add_argument("--noise", type=float, default=0.01)
    synth.add_argument(
        "--flip-axes", type=int, default=0, help="target coordinates whose sign is flipped"
    )
    synth.set_defaults(func=_synth)

    train = commands.add_parser("train", help="adapt once and save the classifier")
    train.add_argument("--model", required=True)
    train.set_defaults(func=_train)

    predict_cmd = commands.add_parser("predict", help="label target samples with a saved model")
    predict_cmd.add_argument("--model", required=True)
    predict_cmd.add_argument("--out")
    predict_cmd.set_defaults(func=_predict)

    distances = commands.add_parser("distances", help="source/target class distance matrix")
    distances.add_argument("--normalize", action="store_true")
    distances.add_argument("--csv")
    distances.set_defaults(func=_distances)

    for command in (run, sweep, synth, train, predict_cmd, distances):
        _add_config_flags(command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        RunLogger(args.log_dir).run_with_logging(args.command, args.func, args, config)
    except (CJSError, OSError, ValueError) as e:
        logger.error(f"cjs {args.command} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
