import csv
import json
import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from cjs.adaptation.pipeline.pipeline import EvaluationReport

logger = logging.getLogger(__name__)

DEFAULT_LOG_DIR = "cjs_logs"


class RunLogger:
    def __init__(self, log_dir: str = DEFAULT_LOG_DIR):
        self.log_dir = log_dir

    def setup_logging(self, name: str) -> str:
        os.makedirs(self.log_dir, exist_ok=True)
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        log_file = os.path.join(self.log_dir, f"{name}_{timestamp}.log")

        handler = logging.FileHandler(log_file)
        handler.setFormatter(logging.Formatter("%(asctime)s - %(levelname)s - %(message)s"))
        root = logging.getLogger()
        self._previous_level = root.level
        root.setLevel(logging.INFO)
        root.addHandler(handler)
        self._handler = handler
        return log_file

    def run_with_logging(self, name: str, func, *args, **kwargs):
        log_file = self.setup_logging(name)

        try:
            result = func(*args, **kwargs)
            logger.info(f"Operation {name} completed successfully")
            return result
        except Exception as e:
            logger.error(f"Error occurred: {str(e)}", exc_info=True)
            raise
        finally:
            logger.info(f"Log file created: {log_file}")
            root = logging.getLogger()
            root.removeHandler(self._handler)
            root.setLevel(self._previous_level)
            self._handler.close()


def write_csv(file_path: str, header: Optional[Sequence[str]], rows: Sequence[Sequence[Any]]):
    try:
        with open(file_path, mode="w", newline="") as file:
            writer = csv.writer(file)
            if header:
                writer.writerow(header)
            for row in rows:
                writer.writerow(row)
    except IOError as e:
        logger.error(f"Error writing CSV file {file_path}: {str(e)}")
        raise


def write_json(file_path: str, data: Dict[str, Any]):
    try:
        with open(file_path, "w") as json_file:
            json.dump(data, json_file, indent=4, sort_keys=True)
            json_file.write("\n")
    except IOError as e:
        logger.error(f"Error writing JSON file {file_path}: {str(e)}")
        raise


def write_report(report: EvaluationReport, file_path: str):
    write_json(file_path, report.model_dump(mode="json"))
    logger.info(f"Report written to {file_path}")


def write_labels(file_path: str, labels: Sequence[int], label_base: int = 0):
    write_csv(file_path, None, [[int(label) + label_base] for label in labels])


def write_matrix(file_path: str, matrix: np.ndarray, prefix: str = "class"):
    header = [""] + [f"{prefix}_{j}" for j in range(matrix.shape[1])]
    rows = [[f"{prefix}_{i}"] + [repr(float(v)) for v in row] for i, row in enumerate(matrix)]
    write_csv(file_path, header, rows)


def _percent(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{100.0 * value:.1f}"


def format_report(report: EvaluationReport) -> str:
    config = report.config_echo
    lines: List[str] = [
        f"runs: {config.runs}  seed: {config.seed}  gamma: {config.gamma}  N: {config.N}  "
        f"rho: {config.rho}  sigma: {config.sigma}",
        f"classes: {report.num_classes}  anchors per run: "
        f"{min(report.num_anchors)}-{max(report.num_anchors)}",
    ]
    if not report.scored:
        lines.append("target unlabeled: predictions only")
        return "\n".join(lines)

    lines.append(f"accuracy (%): {_percent(report.mean)} +/- {_percent(report.std)}")
    lines.append(f"source-only (%): {_percent(report.baseline_mean)}")
    lines.append("")
    lines.append(f"{'run':>4} {'acc %':>7} {'base %':>7} {'iters':>6}")
    for i, (accuracy, baseline, iterations) in enumerate(
        zip(report.per_run_accuracy, report.baseline_accuracy, report.labeling_iterations)
    ):
        lines.append(f"{i:>4} {_percent(accuracy):>7} {_percent(baseline):>7} {iterations:>6}")

    lines.append("")
    lines.append("confusion (rows: truth, last run)")
    for row in report.confusion:
        lines.append(" ".join(f"{count:>5}" for count in row))
    return "\n".join(lines)
