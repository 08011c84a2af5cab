from typing import Tuple

import numpy as np

from cjs.adaptation.dataset.dataset import DomainDataset, FeatureMatrix
from cjs.exceptions import BadDimensions


def synth_generate(
    num_classes: int = 4,
    dim: int = 50,
    subspace_dim: int = 3,
    samples: int = 100,
    angle: float = 0.3,
    noise: float = 0.01,
    seed: int = 0,
    flip_axes: int = 0,
) -> Tuple[DomainDataset, DomainDataset]:
    """Two domains whose classes live on shifted low-dimensional subspaces.

    Every class gets a random orthonormal frame ``[U, V]`` of 2r columns.
    Source samples lie in span(U); target samples lie in the span of
    ``cos(angle) U + sin(angle) V`` and carry isotropic Gaussian noise.
    Subspace coordinates follow a Gamma(2, 1) law, so features are
    nonnegative-leaning like bag-of-words histograms.

    ``flip_axes`` negates the last that many target coordinates. Target
    classes then keep their subspaces but occupy another region of them,
    which a classifier fitted on the source alone does not cover.
    """
    if num_classes < 1 or samples < 1:
        raise BadDimensions("Need at least one class and one sample per class")
    if subspace_dim < 1 or 2 * subspace_dim > dim:
        raise BadDimensions(
            f"Subspace dimension {subspace_dim} needs 2r <= d, got d={dim}"
        )
    if not 0.0 <= angle <= np.pi / 2:
        raise BadDimensions(f"Rotation angle must lie in [0, pi/2], got {angle}")
    if noise < 0:
        raise BadDimensions(f"Noise level must be nonnegative, got {noise}")
    if not 0 <= flip_axes <= subspace_dim:
        raise BadDimensions(
            f"Can flip between 0 and {subspace_dim} target axes, got {flip_axes}"
        )

    rng = np.random.default_rng(seed)
    source_blocks, target_blocks = [], []
    for _ in range(num_classes):
        frame, _ = np.linalg.qr(rng.normal(size=(dim, 2 * subspace_dim)))
        u, v = frame[:, :subspace_dim], frame[:, subspace_dim:]
        rotated = np.cos(angle) * u + np.sin(angle) * v

        source_blocks.append(u @ rng.gamma(2.0, 1.0, size=(subspace_dim, samples)))
        coefficients = rng.gamma(2.0, 1.0, size=(subspace_dim, samples))
        coefficients[subspace_dim - flip_axes :] *= -1.0
        target = rotated @ coefficients
        if noise > 0:
            target = target + noise * rng.normal(size=target.shape)
        target_blocks.append(target)

    labels = np.repeat(np.arange(num_classes), samples)
    source = DomainDataset(FeatureMatrix(np.hstack(source_blocks)), labels, "synth-source")
    target = DomainDataset(FeatureMatrix(np.hstack(target_blocks)), labels, "synth-target")
    return source, target
