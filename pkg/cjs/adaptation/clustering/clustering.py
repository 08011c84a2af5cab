import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from cjs.adaptation.dataset.dataset import FeatureMatrix
from cjs.adaptation.linalg.linalg import DEFAULT_RANK_TOL, Subspace
from cjs.exceptions import NoAnchors, TooManyClusters

logger = logging.getLogger(__name__)

COST_TIE_RTOL = 1e-12
COST_TIE_ATOL = 1e-15


@dataclass(frozen=True)
class ClusteringParams:
    gamma: int = 20
    N: int = 5
    seed: int = 0
    max_kmeans_iters: int = 300

    def __post_init__(self) -> None:
        if self.N < 2:
            raise ValueError(f"Anchor size N must be at least 2, got {self.N}")
        if self.gamma < self.N:
            raise ValueError(f"gamma ({self.gamma}) must be at least N ({self.N})")
        if self.max_kmeans_iters < 1:
            raise ValueError("max_kmeans_iters must be positive")

    def num_groups(self, num_samples: int) -> int:
        return max(1, int(np.floor(num_samples / self.gamma + 0.5)))


@dataclass(frozen=True)
class AnchorSubspace(Subspace):
    member_indices: np.ndarray
    group: int = -1

    @property
    def size(self) -> int:
        return int(self.member_indices.shape[0])


def kmeans(
    features: FeatureMatrix, num_groups: int, seed: int = 0, max_iters: int = 300
) -> np.ndarray:
    """Group index per sample from Lloyd iterations with k-means++ seeding."""
    if num_groups < 1:
        raise ValueError(f"Number of groups must be positive, got {num_groups}")
    if num_groups > features.n:
        raise TooManyClusters(
            f"Cannot form {num_groups} groups from {features.n} samples"
        )
    model = KMeans(
        n_clusters=num_groups,
        init="k-means++",
        n_init=1,
        max_iter=max_iters,
        tol=0.0,
        random_state=int(seed) % (2**32),
        algorithm="lloyd",
    )
    assignment = model.fit_predict(features.data.T)
    # relabel to consecutive ids in order of first appearance, dropping empty groups
    _, first, inverse = np.unique(assignment, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first, kind="stable"), kind="stable")
    return rank[inverse].astype(np.int64)


def core_subgroup(
    features: FeatureMatrix, group: Sequence[int], N: int
) -> Optional[np.ndarray]:
    """Pick the N most compact members of a group.

    The center is the member whose N-1 nearest in-group neighbors have the
    smallest summed Euclidean distance; returns the center followed by those
    neighbors, or None for groups smaller than N. Ties go to the lowest
    sample index.
    """
    members = np.sort(np.asarray(group, dtype=np.int64))
    if members.shape[0] < N:
        return None

    points = features.data[:, members].T
    distances = cdist(points, points)
    np.fill_diagonal(distances, np.inf)
    order = np.argsort(distances, axis=1, kind="stable")[:, : N - 1]
    costs = np.take_along_axis(distances, order, axis=1).sum(axis=1)

    # costs equal up to rounding count as tied
    cutoff = costs.min() * (1.0 + COST_TIE_RTOL) + COST_TIE_ATOL
    center = int(np.flatnonzero(costs <= cutoff)[0])
    return members[np.concatenate(([center], order[center]))]


def build_anchor_subspaces(
    features: FeatureMatrix,
    params: ClusteringParams,
    rank_tol: float = DEFAULT_RANK_TOL,
    n_jobs: int = 1,
) -> List[AnchorSubspace]:
    num_groups = params.num_groups(features.n)
    assignment = kmeans(features, num_groups, params.seed, params.max_kmeans_iters)
    groups = [np.flatnonzero(assignment == g) for g in range(assignment.max() + 1)]

    subgroups = Parallel(n_jobs=n_jobs)(
        delayed(core_subgroup)(features, group, params.N) for group in groups
    )

    anchors = [
        AnchorSubspace.from_samples(
            features.take(members), rank_tol, member_indices=members, group=g
        )
        for g, members in enumerate(subgroups)
        if members is not None
    ]
    if not anchors:
        raise NoAnchors(
            f"None of the {len(groups)} groups holds at least N={params.N} samples"
        )
    logger.info(
        f"Built {len(anchors)} anchor subspaces from {len(groups)} groups "
        f"(N_T={features.n}, gamma={params.gamma}, N={params.N})"
    )
    return anchors
