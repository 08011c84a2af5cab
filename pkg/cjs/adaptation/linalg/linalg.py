from dataclasses import dataclass

import numpy as np
import scipy.linalg

from cjs.adaptation.dataset.dataset import FeatureMatrix
from cjs.exceptions import DimensionMismatch, SingularSystem, ZeroMatrix

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class OrthonormalBasis:
    basis: np.ndarray

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def r(self) -> int:
        return self.basis.shape[1]


def orthonormal_basis(
    samples: FeatureMatrix, rank_tol: float = DEFAULT_RANK_TOL
) -> OrthonormalBasis:
    """Orthonormal basis of the span of the sample columns.

    The numerical rank keeps singular values above ``rank_tol`` times the
    largest one.
    """
    if samples.n < 1:
        raise ZeroMatrix("Cannot build a basis from zero samples")
    u, s, _ = scipy.linalg.svd(samples.data, full_matrices=False)
    if s[0] <= np.finfo(np.float64).tiny:
        raise ZeroMatrix("All sample columns are numerically zero")
    rank = int(np.count_nonzero(s > rank_tol * s[0]))
    basis = np.array(u[:, :rank])
    basis.flags.writeable = False
    return OrthonormalBasis(basis)


def principal_sines(b1: OrthonormalBasis, b2: OrthonormalBasis) -> np.ndarray:
    """Sines of the principal angles between two spans, ascending.

    Cosines are the singular values of ``b1.T @ b2`` clamped to [0, 1].
    For small angles (cos^2 >= 1/2) the sine is read off the component of
    the smaller basis orthogonal to the larger span instead, which keeps it
    accurate where ``sqrt(1 - cos^2)`` cancels.
    """
    if b1.d != b2.d:
        raise DimensionMismatch(f"Ambient dimensions differ: {b1.d} vs {b2.d}")
    wide, narrow = (b1.basis, b2.basis) if b1.r >= b2.r else (b2.basis, b1.basis)

    cross = wide.T @ narrow
    cosines = np.clip(scipy.linalg.svdvals(cross), 0.0, 1.0)
    sines = np.sqrt(1.0 - cosines**2)

    small = cosines**2 >= 0.5
    if small.any():
        residual = narrow - wide @ cross
        residual_sines = np.clip(scipy.linalg.svdvals(residual), 0.0, 1.0)[::-1]
        sines[small] = residual_sines[small]
    return np.sort(sines)


def sylvester_residual(
    x: np.ndarray, delta_kk: np.ndarray, mu: float, rhs: np.ndarray
) -> float:
    ones = np.ones((x.shape[0], x.shape[0]))
    return float(np.max(np.abs(x @ delta_kk + mu * ones @ x - rhs), initial=0.0))


def _check_sylvester_inputs(delta_kk: np.ndarray, mu: float, rhs: np.ndarray) -> None:
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if delta_kk.ndim != 2 or delta_kk.shape[0] != delta_kk.shape[1]:
        raise DimensionMismatch("delta_KK must be square")
    if rhs.ndim != 2 or rhs.shape[1] != delta_kk.shape[0]:
        raise DimensionMismatch(
            f"rhs has shape {rhs.shape}, expected (C, {delta_kk.shape[0]})"
        )


class Rank1SylvesterSolver:
    """Solves ``X @ delta_kk + mu * 1 1^T @ X = rhs`` for a symmetric delta_kk.

    ``delta_kk = Q diag(w) Q^T`` is factored once. Every column of ``X Q``
    then solves ``(w_k I + mu 1 1^T) x = (rhs Q)_k``: the operator acts as
    ``w_k`` on vectors orthogonal to 1 and as ``w_k + mu C`` along 1.
    """

    def __init__(
        self, delta_kk: np.ndarray, mu: float, n_classes: int, tol: float = 1e-12
    ) -> None:
        self.delta_kk = np.asarray(delta_kk, dtype=np.float64)
        self.mu = mu
        self.n_classes = n_classes
        _check_sylvester_inputs(self.delta_kk, mu, np.zeros((n_classes, self.delta_kk.shape[0])))

        self.eigenvalues, self.eigenvectors = scipy.linalg.eigh(self.delta_kk)
        w = self.eigenvalues
        scale = max(1.0, float(np.max(np.abs(w), initial=0.0)), mu * n_classes)
        self.along = w + mu * n_classes
        if np.any(np.abs(self.along) <= tol * scale) or (
            n_classes > 1 and np.any(np.abs(w) <= tol * scale)
        ):
            raise SingularSystem("Sylvester operator is numerically singular")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=np.float64)
        if rhs.shape != (self.n_classes, self.delta_kk.shape[0]):
            raise DimensionMismatch(
                f"rhs has shape {rhs.shape}, expected "
                f"({self.n_classes}, {self.delta_kk.shape[0]})"
            )
        rotated = rhs @ self.eigenvectors
        mean = rotated.mean(axis=0, keepdims=True)
        solution = mean / self.along
        if self.n_classes > 1:
            solution = solution + (rotated - mean) / self.eigenvalues
        return solution @ self.eigenvectors.T


def solve_rank1_sylvester(
    delta_kk: np.ndarray, mu: float, rhs: np.ndarray, tol: float = 1e-12
) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.ndim != 2:
        raise DimensionMismatch("rhs must be a C x K matrix")
    return Rank1SylvesterSolver(delta_kk, mu, rhs.shape[0], tol).solve(rhs)


def solve_sylvester_dense(delta_kk: np.ndarray, mu: float, rhs: np.ndarray) -> np.ndarray:
    """Same equation solved by Bartels-Stewart, without using its structure."""
    delta_kk = np.asarray(delta_kk, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    _check_sylvester_inputs(delta_kk, mu, rhs)
    ones = np.full((rhs.shape[0], rhs.shape[0]), mu)
    try:
        solution = scipy.linalg.solve_sylvester(ones, delta_kk, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularSystem(str(e)) from e
    if not np.all(np.isfinite(solution)):
        raise SingularSystem("Sylvester operator is numerically singular")
    return solution


@dataclass(frozen=True)
class Subspace:
    """A spanning set of sample columns and the orthonormal basis of its span."""

    samples: FeatureMatrix
    basis: OrthonormalBasis

    @classmethod
    def from_samples(cls, samples: FeatureMatrix, rank_tol: float = DEFAULT_RANK_TOL, **fields):
        return cls(samples=samples, basis=orthonormal_basis(samples, rank_tol), **fields)

    @property
    def rank(self) -> int:
        return self.basis.r
