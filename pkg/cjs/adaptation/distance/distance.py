import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

from cjs.adaptation.clustering.clustering import AnchorSubspace
from cjs.adaptation.dataset.dataset import DomainDataset
from cjs.adaptation.linalg.linalg import DEFAULT_RANK_TOL, Subspace, principal_sines
from cjs.exceptions import EmptyClass

logger = logging.getLogger(__name__)

Sigma = Union[str, float, None]


@dataclass(frozen=True)
class SourceSubspace(Subspace):
    class_index: int
    member_indices: Optional[np.ndarray] = None


@dataclass(frozen=True)
class AffinityPair:
    """Gaussian affinities between source/anchor and anchor/anchor subspaces."""

    a_st: np.ndarray
    a_tt: np.ndarray
    sigma_st: float
    sigma_tt: float
    d_st: Optional[np.ndarray] = None
    d_tt: Optional[np.ndarray] = None

    @property
    def num_classes(self) -> int:
        return self.a_st.shape[0]

    @property
    def num_anchors(self) -> int:
        return self.a_st.shape[1]


def subspace_distance(s1: Subspace, s2: Subspace) -> float:
    """Sum of principal sines over the smaller of the two ranks."""
    return float(np.sum(principal_sines(s1.basis, s2.basis)))


def split_by_class(
    dataset: DomainDataset, num_classes: int, rank_tol: float = DEFAULT_RANK_TOL
) -> List[SourceSubspace]:
    if dataset.labels is None:
        raise ValueError(f"Domain {dataset.domain_tag!r} is unlabeled")
    dataset.check_classes(num_classes)
    subspaces = []
    for class_index in range(num_classes):
        members = np.flatnonzero(dataset.labels == class_index)
        if members.size == 0:
            raise EmptyClass(
                f"Class {class_index} has no sample in domain {dataset.domain_tag!r}"
            )
        subspaces.append(
            SourceSubspace.from_samples(
                dataset.features.take(members),
                rank_tol,
                class_index=class_index,
                member_indices=members,
            )
        )
    return subspaces


def distance_matrix(
    rows: Sequence[Subspace], columns: Sequence[Subspace], n_jobs: int = 1
) -> np.ndarray:
    values = Parallel(n_jobs=n_jobs)(
        delayed(subspace_distance)(row, column) for row in rows for column in columns
    )
    return np.asarray(values, dtype=np.float64).reshape(len(rows), len(columns))


def anchor_distance_matrix(anchors: Sequence[Subspace], n_jobs: int = 1) -> np.ndarray:
    k = len(anchors)
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    values = Parallel(n_jobs=n_jobs)(
        delayed(subspace_distance)(anchors[i], anchors[j]) for i, j in pairs
    )
    distances = np.zeros((k, k))
    for (i, j), value in zip(pairs, values):
        distances[i, j] = distances[j, i] = value
    return distances


def median_sigma(distances: np.ndarray) -> float:
    """Median heuristic; falls back to 1.0 when every distance is zero."""
    values = np.asarray(distances, dtype=np.float64).ravel()
    sigma = float(np.median(values)) if values.size else 0.0
    if sigma <= 0.0:
        logger.warning("All subspace distances are zero, using sigma=1.0")
        return 1.0
    return sigma


def gaussian_affinity(distances: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-distances / (2.0 * sigma**2))


def _resolve_sigma(sigma: Sigma, distances: np.ndarray) -> float:
    if sigma is None or sigma == "median":
        return median_sigma(distances)
    sigma = float(sigma)
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return sigma


def build_affinities(
    sources: Sequence[SourceSubspace],
    anchors: Sequence[AnchorSubspace],
    sigma: Sigma = "median",
    n_jobs: int = 1,
) -> AffinityPair:
    if not sources or not anchors:
        raise ValueError("Affinities need at least one source and one anchor subspace")

    d_st = distance_matrix(sources, anchors, n_jobs)
    d_tt = anchor_distance_matrix(anchors, n_jobs)
    upper = d_tt[np.triu_indices(len(anchors), k=1)]

    sigma_st = _resolve_sigma(sigma, d_st)
    sigma_tt = _resolve_sigma(sigma, upper if upper.size else d_st)

    a_st = gaussian_affinity(d_st, sigma_st)
    a_tt = gaussian_affinity(d_tt, sigma_tt)
    np.fill_diagonal(a_tt, 1.0)
    logger.info(
        f"Affinities for C={len(sources)}, K={len(anchors)}: "
        f"sigma_st={sigma_st:.4g}, sigma_tt={sigma_tt:.4g}"
    )
    return AffinityPair(a_st, a_tt, sigma_st, sigma_tt, d_st, d_tt)


def class_distance_matrix(
    source: DomainDataset,
    target: DomainDataset,
    num_classes: int,
    rank_tol: float = DEFAULT_RANK_TOL,
    normalize: bool = False,
    n_jobs: int = 1,
) -> np.ndarray:
    """Distances between every source class and every target class.

    Entry (i, j) compares source class i with target class j, both taken from
    ground-truth labels. ``normalize`` turns each sum of sines into a mean.
    """
    source_classes = split_by_class(source, num_classes, rank_tol)
    target_classes = split_by_class(target, num_classes, rank_tol)
    distances = distance_matrix(source_classes, target_classes, n_jobs)
    if normalize:
        ranks = np.minimum.outer(
            [s.rank for s in source_classes], [t.rank for t in target_classes]
        )
        distances = distances / ranks
    return distances
