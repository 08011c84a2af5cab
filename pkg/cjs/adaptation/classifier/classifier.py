import json
import logging
import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from sklearn.exceptions import ConvergenceWarning
from sklearn.svm import LinearSVC

from cjs.adaptation.clustering.clustering import AnchorSubspace
from cjs.adaptation.dataset.dataset import DomainDataset, FeatureMatrix, LabelMatrix
from cjs.adaptation.distance.distance import SourceSubspace
from cjs.exceptions import (
    DimensionMismatch,
    EmptyClass,
    ModelFormatError,
    NonConvergenceWarning,
    SolverFailure,
)

logger = logging.getLogger(__name__)

MODEL_FORMAT = "cjs-ovr"
MODEL_VERSION = 1


@dataclass(frozen=True)
class CompactJointSubspace:
    """Source samples of one class together with the target samples of every
    anchor labeled with that class."""

    class_index: int
    source_members: np.ndarray
    anchor_members: np.ndarray

    @property
    def size(self) -> int:
        return int(self.source_members.shape[0] + self.anchor_members.shape[0])


@dataclass(frozen=True)
class LinearOvrModel:
    weights: np.ndarray
    biases: np.ndarray
    reg_c: float

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        biases = np.asarray(self.biases, dtype=np.float64).reshape(-1)
        if weights.ndim != 2 or weights.shape[0] != biases.shape[0]:
            raise DimensionMismatch(
                f"Weights {weights.shape} and biases {biases.shape} disagree on C"
            )
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(biases))):
            raise ValueError("Model parameters must be finite")
        if self.reg_c <= 0:
            raise ValueError(f"reg_c must be positive, got {self.reg_c}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    def decision_function(self, features: FeatureMatrix) -> np.ndarray:
        """C x n matrix of class scores."""
        if features.d != self.d:
            raise DimensionMismatch(
                f"Model expects d={self.d} features, got d={features.d}"
            )
        return self.weights @ features.data + self.biases[:, None]


def assemble_joint_subspaces(
    sources: Sequence[SourceSubspace],
    anchors: Sequence[AnchorSubspace],
    anchor_labels: LabelMatrix,
) -> List[CompactJointSubspace]:
    if not anchor_labels.hard:
        raise ValueError("Joint subspaces need hard anchor labels")
    if anchor_labels.size != len(anchors):
        raise DimensionMismatch(
            f"{anchor_labels.size} anchor labels given for {len(anchors)} anchors"
        )
    assigned = anchor_labels.class_indices()

    joint = []
    for source in sources:
        members = [
            anchor.member_indices
            for anchor, label in zip(anchors, assigned)
            if label == source.class_index
        ]
        anchor_members = (
            np.concatenate(members).astype(np.int64) if members else np.empty(0, np.int64)
        )
        joint.append(
            CompactJointSubspace(
                class_index=source.class_index,
                source_members=np.asarray(source.member_indices, dtype=np.int64),
                anchor_members=anchor_members,
            )
        )
    return joint


def _training_set(
    joint: Sequence[CompactJointSubspace], source: DomainDataset, target: DomainDataset
) -> Tuple[np.ndarray, np.ndarray]:
    blocks, labels = [], []
    for subspace in joint:
        if subspace.size == 0:
            raise EmptyClass(f"Class {subspace.class_index} has no training sample")
        blocks.append(source.features.data[:, subspace.source_members])
        blocks.append(target.features.data[:, subspace.anchor_members])
        labels.append(np.full(subspace.size, subspace.class_index, dtype=np.int64))
    return np.hstack(blocks).T, np.concatenate(labels)


def _fit_binary(
    samples: np.ndarray,
    positive: np.ndarray,
    reg_c: float,
    tol: float,
    max_iter: int,
    seed: int,
) -> Tuple[np.ndarray, float, bool]:
    # averaged hinge loss: liblinear sums the loss, so C is divided by n
    svm = LinearSVC(
        C=reg_c / samples.shape[0],
        loss="hinge",
        dual=True,
        tol=tol,
        max_iter=max_iter,
        random_state=int(seed) % (2**32),
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        svm.fit(samples, positive.astype(np.int64))
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    coef, bias = svm.coef_.ravel().copy(), float(svm.intercept_[0])
    if not (np.all(np.isfinite(coef)) and np.isfinite(bias)):
        raise SolverFailure("Linear SVM produced non-finite weights")
    return coef, bias, converged


def train_ovr_svm(
    joint: Sequence[CompactJointSubspace],
    source: DomainDataset,
    target: DomainDataset,
    reg_c: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 5000,
    seed: int = 0,
    n_jobs: int = 1,
) -> LinearOvrModel:
    """One linear SVM per class: members of that class against all other members."""
    if reg_c <= 0:
        raise ValueError(f"reg_c must be positive, got {reg_c}")
    samples, labels = _training_set(joint, source, target)
    num_classes = len(joint)

    if num_classes == 1:
        return LinearOvrModel(np.zeros((1, samples.shape[1])), np.zeros(1), reg_c)

    fitted = Parallel(n_jobs=n_jobs)(
        delayed(_fit_binary)(
            samples, labels == subspace.class_index, reg_c, tol, max_iter, seed
        )
        for subspace in joint
    )
    weights = np.vstack([coef for coef, _, _ in fitted])
    biases = np.array([bias for _, bias, _ in fitted])
    stalled = [subspace.class_index for subspace, (_, _, ok) in zip(joint, fitted) if not ok]
    if stalled:
        message = (
            f"Linear SVM stopped at max_iter={max_iter} before tol={tol:g} "
            f"for classes {stalled}"
        )
        logger.warning(message)
        warnings.warn(message, NonConvergenceWarning, stacklevel=2)
    logger.info(
        f"Trained {num_classes} one-vs-rest SVMs on {samples.shape[0]} samples "
        f"({int(sum(s.anchor_members.shape[0] for s in joint))} from anchors)"
    )
    return LinearOvrModel(weights, biases, reg_c)


def predict(model: LinearOvrModel, features: FeatureMatrix) -> np.ndarray:
    return np.argmax(model.decision_function(features), axis=0).astype(np.int64)


def save_model(model: LinearOvrModel, path: str) -> None:
    data = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
        "reg_c": model.reg_c,
    }
    try:
        with open(path, "w") as json_file:
            json.dump(data, json_file, indent=4)
    except IOError as e:
        logger.error(f"Error writing model file {path}: {str(e)}")
        raise


def load_model(path: str) -> LinearOvrModel:
    with open(path) as json_file:
        try:
            data = json.load(json_file)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"{path} is not a JSON model file: {e}") from e

    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path} is not a {MODEL_FORMAT} model")
    if data.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"Unsupported model version {data.get('version')!r}")
    try:
        return LinearOvrModel(
            np.asarray(data["weights"], dtype=np.float64),
            np.asarray(data["biases"], dtype=np.float64),
            float(data["reg_c"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"Malformed model file {path}: {e}") from e
