"""Baseline interpolations and kernels, plus the evaluation metrics."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .diffusion_kernel import KernelBundle, build_kernel, normalize_to_spd
from .errors import DegenerateDesign, DimensionMismatch, NonPositiveScale, OutOfRange, ValidationError, ZeroVector
from .spd_geometry import EigenDecomposition, SPDKernel, evd, symmetrize


def _dense(k) -> np.ndarray:
    return k.matrix if hasattr(k, "matrix") else np.asarray(k, dtype=float)


def linear_interpolation_point(k1, k2, t: float) -> SPDKernel:
    """(1-t) K1 + t K2."""
    a, b = _dense(k1), _dense(k2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"kernel shapes differ: {a.shape} vs {b.shape}")
    if not 0.0 <= t <= 1.0:
        raise OutOfRange(f"t={t} outside [0, 1]")
    return SPDKernel((1.0 - t) * a + t * b)


class LinearPath:
    """Straight segment between two kernels, with the same interface as the
    geodesic paths so it can feed a flow diagram."""

    def __init__(self, k1, k2):
        self.a, self.b = _dense(k1), _dense(k2)
        if self.a.shape != self.b.shape:
            raise DimensionMismatch(f"kernel shapes differ: {self.a.shape} vs {self.b.shape}")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def at(self, t: float) -> np.ndarray:
        return symmetrize((1.0 - t) * self.a + t * self.b)

    def spectrum(self, t: float, count: int | None = None) -> EigenDecomposition:
        return evd(self.at(t), count)

    def apply(self, t: float, block: np.ndarray) -> np.ndarray:
        return (1.0 - t) * (self.a @ block) + t * (self.b @ block)


def alternating_operator(bundle1: KernelBundle, bundle2: KernelBundle) -> np.ndarray:
    """Column-stochastic A2^T A1^T."""
    if bundle1.n != bundle2.n:
        raise DimensionMismatch(f"sample counts differ: {bundle1.n} vs {bundle2.n}")
    return bundle2.operator.T @ bundle1.operator.T


def alternating_distances(operator: np.ndarray, steps: int = 1) -> np.ndarray:
    """Euclidean distances between columns of operator**steps."""
    if steps < 1:
        raise ValidationError("steps must be a positive integer")
    power = np.linalg.matrix_power(operator, steps)
    return squareform(pdist(power.T, "euclidean"))


def alternating_diffusion_kernel(bundle1: KernelBundle, bundle2: KernelBundle, steps: int = 1,
                                 epsilon: float | None = None) -> KernelBundle:
    """Alternating-diffusion kernel: Gaussian affinity on distances between the
    columns of (A2^T A1^T)**steps, then the two-step normalization.

    ``epsilon`` defaults to the median of the squared distances.
    """
    dist = alternating_distances(alternating_operator(bundle1, bundle2), steps)
    d2 = dist**2
    if epsilon is None:
        off = d2[np.triu_indices_from(d2, 1)]
        epsilon = float(np.median(off)) if np.any(off > 0) else 1.0
    if not epsilon > 0:
        raise NonPositiveScale(f"epsilon must be positive, got {epsilon}")
    return normalize_to_spd(np.exp(-d2 / epsilon), epsilon)


def split_scale_kernels(data1, data2, epsilon1: float, epsilon2: float, s1: int, s2: int):
    """Kernels built with affinity scales divided by s1 + s2, so that their
    eigenvalues are those of the original kernels raised to 1/(s1 + s2) in the
    continuum limit."""
    total = s1 + s2
    return build_kernel(data1, epsilon1 / total), build_kernel(data2, epsilon2 / total)


def alternating_geodesic_variant(fine1, fine2, s1: int, s2: int) -> np.ndarray:
    """fine1**s1 @ fine2**s2: s2 diffusion steps with the second kernel then s1
    with the first. Matches the geodesic at t = s2 / (s1 + s2) when the two
    underlying kernels commute."""
    if s1 < 1 or s2 < 1:
        raise ValidationError("s1 and s2 must be positive integers")
    a, b = _dense(fine1), _dense(fine2)
    return np.linalg.matrix_power(a, s1) @ np.linalg.matrix_power(b, s2)


def smoothness_score(k, target, ell: int) -> float:
    """Share of the target's energy in the span of the top ``ell`` eigenvectors.

    ``target`` is a length-n vector or a (d, n) matrix whose rows are signals.
    """
    m = _dense(k)
    n = m.shape[0]
    x = np.asarray(target, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != n:
        raise DimensionMismatch(f"target length {x.shape[-1]} does not match kernel order {n}")
    if not 1 <= ell <= n:
        raise OutOfRange(f"ell={ell} outside 1..{n}")
    energy = float(np.sum(x**2))
    if energy == 0.0:
        raise ZeroVector("target has zero norm")
    basis = evd(m, ell).vectors if ell < n else None
    if basis is None:
        return 1.0
    return float(min(np.sum((x @ basis) ** 2) / energy, 1.0))


def smoothness_profile(k, target, ells) -> np.ndarray:
    """Scores for several truncations from a single eigendecomposition."""
    m = _dense(k)
    x = np.asarray(target, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    energy = float(np.sum(x**2))
    if energy == 0.0:
        raise ZeroVector("target has zero norm")
    ells = np.asarray(ells, dtype=int)
    if np.any(ells < 1) or np.any(ells > m.shape[0]):
        raise OutOfRange("truncation outside 1..n")
    proj = np.sum((x @ evd(m).vectors) ** 2, axis=0)
    cum = np.cumsum(proj) / energy
    out = np.minimum(cum[ells - 1], 1.0)
    out[ells == m.shape[0]] = 1.0
    return out


def polyfit_correspondence(dist_kernel, dist_latent, degree: int = 3) -> float:
    """Least-squares residual of fitting latent distances by a polynomial in
    kernel distances."""
    u = np.asarray(dist_kernel, dtype=float).ravel()
    v = np.asarray(dist_latent, dtype=float).ravel()
    if u.shape != v.shape:
        raise DimensionMismatch("distance lists differ in length")
    if degree < 1:
        raise ValidationError("degree must be at least 1")
    if np.ptp(u) == 0:
        raise DegenerateDesign("all kernel distances are equal")
    center, spread = u.mean(), np.ptp(u)
    design = np.vander((u - center) / spread, degree + 1, increasing=True)
    scale = np.linalg.norm(design, axis=0)
    design = design / scale
    coef = np.linalg.solve(design.T @ design, design.T @ v)
    resid = v - design @ coef
    return float(resid @ resid)


def weyl_fit(values, ks=None) -> tuple[float, float]:
    """Fit log(values) = -c k^2 through the origin; returns (c, R^2).

    R^2 is measured against the mean of the log-values.
    """
    y = np.log(np.asarray(values, dtype=float))
    k = np.arange(1, len(y) + 1) if ks is None else np.asarray(ks, dtype=float)
    x = k**2
    c = -float(x @ y / (x @ x))
    resid = y + c * x
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / total if total > 0 else 1.0
    return c, r2
