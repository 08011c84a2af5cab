import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from cjs.adaptation.dataset.dataset import LabelMatrix, one_hot_encode
from cjs.adaptation.distance.distance import AffinityPair
from cjs.adaptation.linalg.linalg import Rank1SylvesterSolver
from cjs.exceptions import NonConvergenceWarning

logger = logging.getLogger(__name__)

MAX_EXHAUSTIVE_CANDIDATES = 10**6


@dataclass(frozen=True)
class LabelingProblem:
    affinities: AffinityPair
    rho: float = 1.0
    mu: float = 1.0
    max_iter: int = 10000
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.rho < 0:
            raise ValueError(f"rho must be nonnegative, got {self.rho}")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True)
class JointAffinity:
    a: np.ndarray
    laplacian: np.ndarray
    degree: np.ndarray
    num_classes: int

    def blocks(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Laplacian split after the C-th row and column: CC, CK, KC, KK."""
        c = self.num_classes
        lap = self.laplacian
        return lap[:c, :c], lap[:c, c:], lap[c:, :c], lap[c:, c:]


@dataclass
class LabelingResult:
    soft: LabelMatrix
    iterations: int
    constraint_residual: float
    change: float
    converged: bool
    multiplier: np.ndarray
    history: List[Tuple[float, float]] = field(default_factory=list)


def assemble_joint_affinity(pair: AffinityPair, rho: float) -> JointAffinity:
    """Joint affinity over sources then anchors, and its graph Laplacian."""
    c, k = pair.num_classes, pair.num_anchors
    a = np.zeros((c + k, c + k))
    a[:c, :c] = np.eye(c)
    a[:c, c:] = 0.5 * pair.a_st
    a[c:, :c] = 0.5 * pair.a_st.T
    a[c:, c:] = rho * pair.a_tt
    degree = np.diag(a.sum(axis=1))
    return JointAffinity(a, degree - a, degree, c)


def label_anchors_soft(
    problem: LabelingProblem, source_codes: Optional[np.ndarray] = None
) -> LabelingResult:
    """Relaxed anchor labels by alternating a Sylvester solve and a multiplier step.

    Starting from zero labels and multipliers, each iteration solves
    ``Y' D_KK + mu 1 1^T Y' = mu 1 1^T - Y D_CK - 1 lambda_2^T`` and then
    moves the multipliers by ``mu`` times the violation of the unit
    column-sum constraint. Stops once both the violation and the change of
    ``Y'`` fall to ``tol``, or after ``max_iter`` iterations.
    """
    pair = problem.affinities
    c, k = pair.num_classes, pair.num_anchors
    y = np.eye(c) if source_codes is None else np.asarray(source_codes, dtype=np.float64)
    if not np.array_equal(y, np.eye(c)):
        raise ValueError("Source label codes must be the C x C identity")

    joint = assemble_joint_affinity(pair, problem.rho)
    _, delta_ck, _, delta_kk = joint.blocks()
    solver = Rank1SylvesterSolver(delta_kk, problem.mu, c)

    mu = problem.mu
    fixed = mu * np.ones((c, k)) - y @ delta_ck
    multiplier = np.zeros(c + k)
    labels = np.zeros((c, k))
    history = []
    converged = False
    constraint = change = np.inf

    for iteration in range(1, problem.max_iter + 1):
        rhs = fixed - np.outer(np.ones(c), multiplier[c:])
        updated = solver.solve(rhs)

        violation = np.concatenate((y.sum(axis=0), updated.sum(axis=0))) - 1.0
        multiplier = multiplier + mu * violation

        constraint = float(np.max(np.abs(violation)))
        change = float(np.max(np.abs(updated - labels)))
        labels = updated
        history.append((constraint, change))
        if constraint <= problem.tol and change <= problem.tol:
            converged = True
            break

    if converged:
        logger.info(
            f"Anchor labeling converged after {iteration} iterations "
            f"(constraint residual {constraint:.3g})"
        )
    else:
        message = (
            f"Anchor labeling stopped at max_iter={problem.max_iter} "
            f"(constraint residual {constraint:.3g}, change {change:.3g})"
        )
        logger.warning(message)
        warnings.warn(message, NonConvergenceWarning, stacklevel=2)

    return LabelingResult(
        soft=LabelMatrix(labels, hard=False),
        iterations=iteration,
        constraint_residual=constraint,
        change=change,
        converged=converged,
        multiplier=multiplier,
        history=history,
    )


def discretize(soft: LabelMatrix) -> LabelMatrix:
    """Set the largest entry of every code column to 1, the rest to 0."""
    codes = soft.codes
    empty = ~np.any(codes != 0.0, axis=0)
    if np.any(empty):
        message = f"{int(empty.sum())} anchor code columns are all zero, assigning class 0"
        logger.warning(message)
        warnings.warn(message, NonConvergenceWarning, stacklevel=2)
    return one_hot_encode(np.argmax(codes, axis=0), codes.shape[0])


def label_anchors(problem: LabelingProblem) -> Tuple[LabelMatrix, LabelingResult]:
    result = label_anchors_soft(problem)
    return discretize(result.soft), result


def labeling_cost(codes: np.ndarray, a_st: np.ndarray, a_tt: np.ndarray, rho: float) -> float:
    """Cost of anchor label codes: source-anchor disagreement plus rho times
    anchor-anchor disagreement, each weighted by affinity."""
    codes = np.asarray(codes, dtype=np.float64)
    norms = np.sum(codes**2, axis=0)
    source_terms = 1.0 - 2.0 * codes + norms[None, :]
    anchor_terms = norms[:, None] + norms[None, :] - 2.0 * codes.T @ codes
    return float(np.sum(source_terms * a_st) + rho * np.sum(anchor_terms * a_tt))


def exhaustive_labeling(
    a_st: np.ndarray, a_tt: np.ndarray, rho: float
) -> Tuple[np.ndarray, float]:
    """Best hard assignment by enumerating all C^K candidates."""
    c, k = a_st.shape
    if c**k > MAX_EXHAUSTIVE_CANDIDATES:
        raise ValueError(f"{c}^{k} candidate assignments is too many to enumerate")
    best_labels, best_cost = None, np.inf
    for candidate in itertools.product(range(c), repeat=k):
        cost = labeling_cost(one_hot_encode(candidate, c).codes, a_st, a_tt, rho)
        if cost < best_cost:
            best_labels, best_cost = np.asarray(candidate), cost
    return best_labels, best_cost
