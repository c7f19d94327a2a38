"""Spectral operations and geodesic interpolation for SPD and fixed-rank SPSD matrices.

All matrix functions go through a full symmetric eigendecomposition so the
spectra seen by the flow diagram and by the geodesic agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NoConvergence,
    NonFinite,
    NotPositiveDefinite,
    NotSymmetric,
    RankMismatch,
    RankTooHigh,
)

FLOOR_RATIO = 1e-12
ZERO_ANGLE = 1e-10
_SYM_TOL = 1e-8
_ORTHO_TOL = 1e-10
_SIGN_TIE = 1e-9


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite(f"{name} has NaN or infinite entries")
    return m


def _check_symmetric(m: np.ndarray, name: str = "matrix") -> None:
    scale = max(float(np.max(np.abs(m))), 1.0) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > _SYM_TOL * scale:
        raise NotSymmetric(f"{name} is not symmetric")


def normalize_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's largest-magnitude entry is positive.

    Entries within a relative 1e-9 of the column maximum count as tied, and the
    lowest index among them decides the sign.
    """
    vectors = np.array(vectors, dtype=float)
    if vectors.size == 0:
        return vectors
    mags = np.abs(vectors)
    peak = mags.max(axis=0)
    pivot = np.argmax(mags >= peak * (1.0 - _SIGN_TIE), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "vectors", _frozen(self.vectors))

    def top(self, count: int) -> "EigenDecomposition":
        return EigenDecomposition(self.values[:count], self.vectors[:, :count])


def evd(m: np.ndarray, count: int | None = None) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    With ``count`` only the leading ``count`` eigenpairs are computed.
    """
    m = _check_square(m)
    _check_symmetric(m)
    n = m.shape[0]
    try:
        if count is None or count >= n:
            values, vectors = np.linalg.eigh(m)
        else:
            values, vectors = scipy.linalg.eigh(m, subset_by_index=[n - count, n - 1])
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values[order], normalize_signs(vectors[:, order]))


def _apply_power(eig: EigenDecomposition, t: float) -> np.ndarray:
    return symmetrize((eig.vectors * eig.values**t) @ eig.vectors.T)


class SPDKernel:
    """Symmetric positive definite matrix with its eigendecomposition cached."""

    __slots__ = ("matrix", "eig", "floor")

    def __init__(self, matrix: np.ndarray, floor_ratio: float = FLOOR_RATIO):
        m = _check_square(matrix, "kernel")
        _check_symmetric(m, "kernel")
        m = symmetrize(m)
        eig = evd(m)
        floor = floor_ratio * max(float(eig.values[0]), 0.0)
        if eig.values[0] <= 0 or eig.values[-1] <= floor:
            raise NotPositiveDefinite(
                f"smallest eigenvalue {eig.values[-1]:.3e} is not above the floor {floor:.3e}"
            )
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "eig", eig)
        object.__setattr__(self, "floor", floor)

    def __setattr__(self, name, value):
        raise AttributeError("SPDKernel is immutable")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def power(self, t: float) -> np.ndarray:
        return _apply_power(self.eig, t)


def as_spd(k) -> SPDKernel:
    return k if isinstance(k, SPDKernel) else SPDKernel(k)


def is_positive_definite(m: np.ndarray, floor_ratio: float = FLOOR_RATIO) -> bool:
    values = evd(m).values
    return bool(values[0] > 0 and values[-1] > floor_ratio * values[0])


def fractional_power(k, t: float) -> SPDKernel:
    return SPDKernel(as_spd(k).power(t))


class GeodesicPath:
    """Affine-invariant geodesic between two SPD kernels.

    The congruence-normalized matrix K1^{-1/2} K2 K1^{-1/2} is diagonalized once;
    every point is then F diag(c**t) F^T with F = K1^{1/2} U.
    """

    def __init__(self, k1, k2):
        k1, k2 = as_spd(k1), as_spd(k2)
        if k1.n != k2.n:
            raise DimensionMismatch(f"kernel orders differ: {k1.n} vs {k2.n}")
        self.start, self.end = k1, k2
        inv_sqrt = k1.power(-0.5)
        relative = evd(symmetrize(inv_sqrt @ k2.matrix @ inv_sqrt))
        if relative.values[-1] <= 0:
            raise NotPositiveDefinite("relative kernel lost positivity")
        self.relative = relative
        self.frame = k1.power(0.5) @ relative.vectors

    @property
    def n(self) -> int:
        return self.start.n

    def at(self, t: float) -> np.ndarray:
        return symmetrize((self.frame * self.relative.values**t) @ self.frame.T)

    def spectrum(self, t: float, count: int | None = None) -> EigenDecomposition:
        return evd(self.at(t), count)

    def apply(self, t: float, block: np.ndarray) -> np.ndarray:
        return self.frame @ (self.relative.values[:, None] ** t * (self.frame.T @ block))


def geodesic_point(k1, k2, t: float) -> SPDKernel:
    return SPDKernel(GeodesicPath(k1, k2).at(t))


def affine_invariant_distance(k1, k2) -> float:
    k1, k2 = as_spd(k1), as_spd(k2)
    if k1.n != k2.n:
        raise DimensionMismatch(f"kernel orders differ: {k1.n} vs {k2.n}")
    inv_sqrt = k1.power(-0.5)
    values = evd(symmetrize(inv_sqrt @ k2.matrix @ inv_sqrt)).values
    if values[-1] <= 0:
        raise NotPositiveDefinite("relative kernel lost positivity")
    return float(np.sqrt(np.sum(np.log(values) ** 2)))


class SPSDKernel:
    """Rank-p positive semidefinite matrix stored as U R^2 U^T."""

    __slots__ = ("basis", "core", "core_eig")

    def __init__(self, basis: np.ndarray, core: np.ndarray):
        basis = np.asarray(basis, dtype=float)
        core = _check_square(core, "core")
        if basis.ndim != 2 or basis.shape[1] != core.shape[0]:
            raise DimensionMismatch(f"basis {basis.shape} does not match core {core.shape}")
        if basis.shape[1] > basis.shape[0]:
            raise RankTooHigh("rank exceeds the ambient order")
        if not np.all(np.isfinite(basis)):
            raise NonFinite("basis has NaN or infinite entries")
        p = basis.shape[1]
        if np.max(np.abs(basis.T @ basis - np.eye(p)), initial=0.0) > _ORTHO_TOL:
            raise DimensionMismatch("basis columns are not orthonormal")
        _check_symmetric(core, "core")
        core = symmetrize(core)
        core_eig = evd(core)
        if core_eig.values[-1] <= FLOOR_RATIO * max(core_eig.values[0], 0.0) or core_eig.values[0] <= 0:
            raise NotPositiveDefinite("core is not strictly positive definite")
        object.__setattr__(self, "basis", _frozen(basis))
        object.__setattr__(self, "core", _frozen(core))
        object.__setattr__(self, "core_eig", core_eig)

    def __setattr__(self, name, value):
        raise AttributeError("SPSDKernel is immutable")

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return symmetrize(self.basis @ self.core @ self.basis.T)

    def spectrum(self, count: int | None = None) -> EigenDecomposition:
        """Nonzero eigenpairs in the ambient space; the basis is orthonormal,
        so they come straight from the core."""
        eig = self.core_eig if count is None else self.core_eig.top(count)
        return EigenDecomposition(eig.values, normalize_signs(self.basis @ eig.vectors))


def truncate_to_rank(k, p: int) -> SPSDKernel:
    m = k.matrix if isinstance(k, (SPDKernel, SPSDKernel)) else k
    m = _check_square(m)
    if p < 1 or p > m.shape[0]:
        raise RankTooHigh(f"rank {p} outside 1..{m.shape[0]}")
    eig = evd(m, p)
    floor = FLOOR_RATIO * max(float(eig.values[0]), 0.0)
    if eig.values[p - 1] <= floor:
        raise RankTooHigh(f"eigenvalue {p} ({eig.values[p - 1]:.3e}) is not above the floor")
    return SPSDKernel(eig.vectors[:, :p], np.diag(eig.values[:p]))


class SPSDPath:
    """Fixed-rank curve between two rank-p kernels: a Grassmann geodesic for the
    range combined with an SPD geodesic for the p x p cores."""

    def __init__(self, a: SPSDKernel, b: SPSDKernel):
        if a.n != b.n:
            raise DimensionMismatch(f"kernel orders differ: {a.n} vs {b.n}")
        if a.rank != b.rank:
            raise RankMismatch(f"ranks differ: {a.rank} vs {b.rank}")
        self.start, self.end = a, b
        rot_a, cosines, rot_b_t = np.linalg.svd(a.basis.T @ b.basis)
        u_a = a.basis @ rot_a
        u_b = b.basis @ rot_b_t.T
        angles = np.arccos(np.clip(cosines, -1.0, 1.0))
        residual = u_b - u_a @ (u_a.T @ u_b)
        moving = angles >= ZERO_ANGLE
        x = np.zeros_like(u_a)
        x[:, moving] = residual[:, moving] / np.sin(angles[moving])
        self.u_a, self.x, self.angles = u_a, x, angles
        core_a = symmetrize(rot_a.T @ a.core @ rot_a)
        core_b = symmetrize(rot_b_t @ b.core @ rot_b_t.T)
        self.cores = GeodesicPath(core_a, core_b)

    @property
    def n(self) -> int:
        return self.start.n

    @property
    def rank(self) -> int:
        return self.start.rank

    def basis_at(self, t: float) -> np.ndarray:
        return self.u_a * np.cos(self.angles * t) + self.x * np.sin(self.angles * t)

    def at(self, t: float) -> SPSDKernel:
        basis = self.basis_at(t)
        # orthonormal up to rounding; re-orthonormalize to keep the invariant tight
        q, r = np.linalg.qr(basis)
        q = q * np.sign(np.diag(r))
        core = self.cores.at(t)
        return SPSDKernel(q, symmetrize((q.T @ basis) @ core @ (basis.T @ q)))

    def spectrum(self, t: float, count: int | None = None) -> EigenDecomposition:
        # U(t) has orthonormal columns, so the nonzero spectrum is that of the core
        eig = evd(self.cores.at(t), count)
        return EigenDecomposition(eig.values, normalize_signs(self.basis_at(t) @ eig.vectors))

    def apply(self, t: float, block: np.ndarray) -> np.ndarray:
        """gamma(t) @ block without forming the n x n matrix."""
        basis = self.basis_at(t)
        return basis @ (self.cores.at(t) @ (basis.T @ block))


def spsd_geodesic_point(a: SPSDKernel, b: SPSDKernel, t: float) -> SPSDKernel:
    return SPSDPath(a, b).at(t)
