"""Diffusion-maps kernels built from point clouds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import (
    DegenerateData,
    DimensionMismatch,
    IndexOutOfRange,
    NonFinite,
    NonPositiveScale,
    RankTooHigh,
    ZeroRowSum,
)
from .spd_geometry import EigenDecomposition, evd, symmetrize


def as_dataset(data, weights=None) -> np.ndarray:
    """Validate an (n, d) sample array; optional per-feature weights rescale the
    columns so that Euclidean distance becomes the weighted metric."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise DimensionMismatch(f"dataset must be 2-D, got {data.ndim}-D")
    if data.shape[0] < 2:
        raise DegenerateData("need at least two samples")
    if not np.all(np.isfinite(data)):
        raise NonFinite("dataset has NaN or infinite entries")
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (data.shape[1],) or np.any(weights < 0):
            raise DimensionMismatch("weights must be one nonnegative value per feature")
        data = data * np.sqrt(weights)
    return data


def squared_distances(data, weights=None) -> np.ndarray:
    return squareform(pdist(as_dataset(data, weights), "sqeuclidean"))


def gaussian_affinity(data, epsilon: float, weights=None) -> np.ndarray:
    if not epsilon > 0:
        raise NonPositiveScale(f"epsilon must be positive, got {epsilon}")
    return np.exp(-squared_distances(data, weights) / epsilon)


def median_scale(data, weights=None) -> float:
    """Median of the pairwise squared distances over distinct pairs."""
    d2 = pdist(as_dataset(data, weights), "sqeuclidean")
    if not np.any(d2 > 0):
        raise DegenerateData("all pairwise distances are zero")
    return float(np.median(d2))


@dataclass(frozen=True)
class KernelBundle:
    affinity: np.ndarray
    first: np.ndarray  # W normalized by the density estimate on both sides
    operator: np.ndarray  # row-stochastic A
    kernel: np.ndarray  # symmetric conjugate of A
    first_degree: np.ndarray
    degree: np.ndarray
    epsilon: float = float("nan")

    @property
    def n(self) -> int:
        return self.kernel.shape[0]

    @property
    def stationary(self) -> np.ndarray:
        return self.degree / self.degree.sum()

    def spectrum(self, count: int | None = None) -> EigenDecomposition:
        return evd(self.kernel, count)

    def right_eigenvectors(self, count: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and right eigenvectors of the operator, scaled so that the
        diffusion distance is the Euclidean distance of the full embedding."""
        eig = self.spectrum(count)
        return eig.values, eig.vectors / np.sqrt(self.stationary)[:, None]


def normalize_to_spd(w, epsilon: float = float("nan")) -> KernelBundle:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatch("affinity must be square")
    if not np.all(np.isfinite(w)):
        raise NonFinite("affinity has NaN or infinite entries")
    first_degree = w.sum(axis=1)
    if np.any(first_degree <= 0):
        raise ZeroRowSum("affinity has a non-positive row sum")
    first = symmetrize(w / np.outer(first_degree, first_degree))
    degree = first.sum(axis=1)
    if np.any(degree <= 0):
        raise ZeroRowSum("normalized affinity has a non-positive row sum")
    operator = first / degree[:, None]
    root = np.sqrt(degree)
    kernel = symmetrize(first / np.outer(root, root))
    return KernelBundle(w, first, operator, kernel, first_degree, degree, float(epsilon))


def build_kernel(data, epsilon: float | None = None, weights=None) -> KernelBundle:
    if epsilon is None:
        epsilon = median_scale(data, weights)
    return normalize_to_spd(gaussian_affinity(data, epsilon, weights), epsilon)


def diffusion_map_embedding(bundle: KernelBundle, t: float, ell: int) -> np.ndarray:
    """Rows are samples; column k holds mu_{k+2}^t times the (k+2)-th right eigenvector."""
    if ell < 1 or ell + 1 > bundle.n:
        raise RankTooHigh(f"ell={ell} needs ell+1 <= n={bundle.n}")
    values, vectors = bundle.right_eigenvectors(ell + 1)
    return vectors[:, 1:] * values[1:] ** t


def diffusion_distance(bundle: KernelBundle, t: int, i: int, j: int) -> float:
    """Stationary-weighted distance between rows i and j of A^t."""
    _check_index(bundle.n, i, j)
    rows = np.linalg.matrix_power(bundle.operator, t)[[i, j]]
    return float(np.sqrt(np.sum((rows[0] - rows[1]) ** 2 / bundle.stationary)))


def unnormalized_diffusion_distance(bundle: KernelBundle, steps: int, i: int, j: int) -> float:
    _check_index(bundle.n, i, j)
    rows = np.zeros((2, bundle.n))
    rows[0, i] = rows[1, j] = 1.0
    for _ in range(steps):
        rows = rows @ bundle.operator
    return float(np.linalg.norm(rows[0] - rows[1]))


def pairwise_unnormalized_distances(operator: np.ndarray, steps: int) -> np.ndarray:
    """All ||delta_i^T A^s - delta_j^T A^s|| at once."""
    rows = np.linalg.matrix_power(np.asarray(operator, dtype=float), steps)
    return np.sqrt(np.maximum(squareform(pdist(rows, "sqeuclidean")), 0.0))


def _check_index(n: int, *indices: int) -> None:
    for idx in indices:
        if not 0 <= idx < n:
            raise IndexOutOfRange(f"index {idx} outside 0..{n - 1}")
