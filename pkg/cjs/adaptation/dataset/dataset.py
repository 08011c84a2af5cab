import csv
import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from cjs.exceptions import (
    DatasetParseError,
    DimensionMismatch,
    LabelLengthMismatch,
    LabelOutOfRange,
    MixedLabeling,
)

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense d x n matrix, one sample per column."""

    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionMismatch(f"Feature matrix must be 2-D, got {data.ndim}-D")
        if data.shape[0] < 1:
            raise DimensionMismatch("Feature dimension must be at least 1")
        if not np.all(np.isfinite(data)):
            raise DatasetParseError("Feature matrix contains NaN or Inf entries")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def take(self, indices: Sequence[int]) -> "FeatureMatrix":
        return FeatureMatrix(self.data[:, np.asarray(indices, dtype=np.intp)])

    def scaled(self, factor: float) -> "FeatureMatrix":
        return FeatureMatrix(self.data * factor)


@dataclass(frozen=True)
class DomainDataset:
    features: FeatureMatrix
    labels: Optional[np.ndarray] = None
    domain_tag: str = ""

    def __post_init__(self) -> None:
        if self.labels is None:
            return
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise LabelLengthMismatch("Labels must be a flat vector")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise DatasetParseError("Labels must be integral class indices")
        labels = labels.astype(np.int64)
        if labels.shape[0] != self.features.n:
            raise LabelLengthMismatch(
                f"{labels.shape[0]} labels given for {self.features.n} samples"
            )
        if labels.size and labels.min() < 0:
            raise LabelOutOfRange(f"Negative class index {labels.min()}")
        object.__setattr__(self, "labels", _frozen(labels))

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    @property
    def num_classes(self) -> int:
        if self.labels is None or self.labels.size == 0:
            return 0
        return int(self.labels.max()) + 1

    def check_classes(self, num_classes: int) -> None:
        if self.labels is not None and self.labels.size and self.labels.max() >= num_classes:
            raise LabelOutOfRange(
                f"Class index {self.labels.max()} out of range for C={num_classes}"
            )

    def with_features(self, features: FeatureMatrix) -> "DomainDataset":
        return DomainDataset(features, self.labels, self.domain_tag)


@dataclass(frozen=True)
class LabelMatrix:
    """C x m label codes, one code vector per column."""

    codes: np.ndarray
    hard: bool = True

    def __post_init__(self) -> None:
        codes = np.asarray(self.codes, dtype=np.float64)
        if codes.ndim != 2:
            raise DimensionMismatch("Label codes must be a C x m matrix")
        if not np.all(np.isfinite(codes)):
            raise ValueError("Label codes must be finite")
        if self.hard and codes.shape[1]:
            if not np.all((codes == 0.0) | (codes == 1.0)) or not np.all(
                codes.sum(axis=0) == 1.0
            ):
                raise ValueError("Hard label codes must be one-hot columns")
        object.__setattr__(self, "codes", _frozen(codes))

    @property
    def num_classes(self) -> int:
        return self.codes.shape[0]

    @property
    def size(self) -> int:
        return self.codes.shape[1]

    def class_indices(self) -> np.ndarray:
        return np.argmax(self.codes, axis=0)


def one_hot_encode(labels: Sequence[int], num_classes: int) -> LabelMatrix:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelOutOfRange(
            f"Labels must lie in [0, {num_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    codes = np.zeros((num_classes, labels.size))
    codes[labels, np.arange(labels.size)] = 1.0
    return LabelMatrix(codes, hard=True)


def _is_numeric_row(row: List[str]) -> bool:
    try:
        [float(token) for token in row]
        return True
    except ValueError:
        return False


def _read_feature_rows(features_path: str) -> np.ndarray:
    with open(features_path, newline="") as file:
        rows = [row for row in csv.reader(file) if row and any(t.strip() for t in row)]

    if rows and not _is_numeric_row(rows[0]):
        logger.debug(f"Skipping header line of {features_path}")
        rows = rows[1:]
    if not rows:
        raise DatasetParseError(f"No samples found in {features_path}")

    width = len(rows[0])
    values = np.empty((len(rows), width))
    for line_no, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DatasetParseError(
                f"{features_path}: row {line_no} has {len(row)} values, expected {width}"
            )
        try:
            values[line_no - 1] = [float(token) for token in row]
        except ValueError as e:
            raise DatasetParseError(f"{features_path}: row {line_no}: {e}") from e

    if not np.all(np.isfinite(values)):
        raise DatasetParseError(f"{features_path}: NaN or Inf values are not allowed")
    return values


def _read_labels(labels_path: str, label_base: int) -> np.ndarray:
    labels = []
    with open(labels_path) as file:
        for line_no, line in enumerate(file, start=1):
            token = line.strip()
            if not token:
                continue
            try:
                labels.append(int(token) - label_base)
            except ValueError as e:
                raise DatasetParseError(f"{labels_path}: line {line_no}: {e}") from e
    return np.asarray(labels, dtype=np.int64)


def l2_normalize(features: FeatureMatrix) -> FeatureMatrix:
    norms = np.linalg.norm(features.data, axis=0)
    norms[norms == 0.0] = 1.0
    return FeatureMatrix(features.data / norms)


def load_dataset(
    features_path: str,
    labels_path: Optional[str] = None,
    domain_tag: str = "",
    label_base: int = 0,
    normalize: bool = False,
) -> DomainDataset:
    """Read a CSV feature file (one sample per row) and an optional label file.

    Samples become columns of the returned feature matrix. ``label_base`` is
    subtracted from every label, so 1-based label files load with
    ``label_base=1``.
    """
    for path in (features_path, labels_path):
        if path is not None and not os.path.isfile(path):
            raise FileNotFoundError(path)

    features = FeatureMatrix(_read_feature_rows(features_path).T)
    if normalize:
        features = l2_normalize(features)

    labels = None
    if labels_path is not None:
        labels = _read_labels(labels_path, label_base)
        if labels.shape[0] != features.n:
            raise LabelLengthMismatch(
                f"{labels_path} holds {labels.shape[0]} labels for {features.n} samples"
            )

    dataset = DomainDataset(features, labels, domain_tag or os.path.basename(features_path))
    logger.info(
        f"Loaded {dataset.domain_tag}: d={features.d}, n={features.n}, "
        f"labeled={dataset.is_labeled}"
    )
    return dataset


def save_dataset(
    dataset: DomainDataset,
    features_path: str,
    labels_path: Optional[str] = None,
    label_base: int = 0,
) -> None:
    with open(features_path, mode="w", newline="") as file:
        writer = csv.writer(file)
        for column in dataset.features.data.T:
            writer.writerow([repr(float(value)) for value in column])

    if labels_path is not None:
        if dataset.labels is None:
            raise ValueError(f"Dataset {dataset.domain_tag!r} has no labels to save")
        with open(labels_path, "w") as file:
            for label in dataset.labels:
                file.write(f"{int(label) + label_base}\n")


def merge_domains(datasets: Sequence[DomainDataset]) -> DomainDataset:
    """Concatenate several domains sample-wise into a single domain."""
    if not datasets:
        raise ValueError("merge_domains needs at least one dataset")
    if len(datasets) == 1:
        return datasets[0]

    dims = {dataset.features.d for dataset in datasets}
    if len(dims) != 1:
        raise DimensionMismatch(f"Cannot merge domains of dimensions {sorted(dims)}")
    labeled = {dataset.is_labeled for dataset in datasets}
    if len(labeled) != 1:
        raise MixedLabeling("Cannot merge labeled with unlabeled domains")

    features = FeatureMatrix(np.hstack([dataset.features.data for dataset in datasets]))
    labels = None
    if labeled.pop():
        labels = np.concatenate([dataset.labels for dataset in datasets])
    tag = "+".join(dataset.domain_tag for dataset in datasets)
    return DomainDataset(features, labels, tag)
