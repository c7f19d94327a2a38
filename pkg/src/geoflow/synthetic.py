"""Synthetic multimodal datasets with known latent variables and analytic spectra."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .spd_geometry import GeodesicPath, as_spd, geodesic_point

POLOIDAL = "poloidal"
TOROIDAL = "toroidal"


@dataclass(frozen=True)
class LatentTriple:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    kinds: tuple[str, str, str]
    low: float
    high: float
    seed: int | None = None

    @property
    def n(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class ScaleSet:
    lx1: float = 1.0
    lx2: float = 1.0
    ly1: float = 1.0
    lz2: float = 1.0

    def __post_init__(self):
        for name in ("lx1", "lx2", "ly1", "lz2"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"scale {name} must be positive")


def sample_latents(n: int, seed=None, low: float = -0.5, high: float = 0.5,
                   kinds: tuple[str, str, str] = ("interval", "interval", "interval")) -> LatentTriple:
    if n < 2:
        raise ValidationError("need at least two samples")
    rng = np.random.default_rng(seed)
    x, y, z = rng.uniform(low, high, size=(3, n))
    return LatentTriple(x, y, z, kinds, low, high, seed)


def gen_flat_2d(n: int, scales: ScaleSet, seed=None):
    lat = sample_latents(n, seed)
    s1 = np.column_stack([scales.lx1 * lat.x, scales.ly1 * lat.y])
    s2 = np.column_stack([scales.lx2 * lat.x, scales.lz2 * lat.z])
    return s1, s2, lat


def gen_strip_1d(n: int, l1: float = 1.0, l2: float = 5.0, seed=None):
    """Two scaled copies of one uniform latent on [-1/2, 1/2]."""
    lat = sample_latents(n, seed)
    return (l1 * lat.x)[:, None], (l2 * lat.x)[:, None], lat


def analytic_flat_eigenvalue(lx: float, ly: float, kx: int, ky: int) -> float:
    """Neumann Laplacian eigenvalue of the rectangle [0, lx] x [0, ly]."""
    return (kx * np.pi / lx) ** 2 + (ky * np.pi / ly) ** 2


def analytic_flat_spectrum(lx: float, ly: float, count: int) -> np.ndarray:
    """The ``count`` smallest rectangle eigenvalues, ascending, including 0."""
    kmax = count + 1
    vals = sorted(analytic_flat_eigenvalue(lx, ly, kx, ky) for kx, ky in itertools.product(range(kmax), repeat=2))
    return np.array(vals[:count])


def analytic_interval_spectrum(length: float, count: int) -> np.ndarray:
    return np.array([(k * np.pi / length) ** 2 for k in range(count)])


def continuous_to_discrete_eig(lam, epsilon: float):
    """Kernel eigenvalue predicted for Laplacian eigenvalue ``lam``.

    ``epsilon`` is the kernel bandwidth: with the affinity exp(-d^2/s), pass
    epsilon = sqrt(s).
    """
    return np.exp(-(epsilon**2) * np.asarray(lam, dtype=float) / 4.0)


def gen_torus(n: int, radii1=(10.0, 5.0), radii2=(10.0, 3.0), common_angle: str = POLOIDAL, seed=None):
    """Two tori in R^3 sharing one angle; radii are (major, minor)."""
    if min(*radii1, *radii2) <= 0:
        raise ValidationError("radii must be positive")
    lat = sample_latents(n, seed, 0.0, 2 * np.pi, ("circle", "circle", "circle"))

    def embed(big, small, common, specific):
        if common_angle == POLOIDAL:
            poloidal, toroidal = common, specific
        elif common_angle == TOROIDAL:
            poloidal, toroidal = specific, common
        else:
            raise ValidationError(f"unknown common angle {common_angle!r}")
        ring = big + small * np.cos(poloidal)
        return np.column_stack([ring * np.cos(toroidal), ring * np.sin(toroidal), small * np.sin(poloidal)])

    return embed(*radii1, lat.x, lat.y), embed(*radii2, lat.x, lat.z), lat


def analytic_torus_eigenvalue(r_major: float, r_minor: float, kx: int, ky: int) -> float:
    return (np.floor(kx / 2) / (2 * r_minor)) ** 2 + (np.floor(ky / 2) / (2 * r_major)) ** 2


def nonlinear_measurement(latents: LatentTriple, which: str, scales: ScaleSet) -> np.ndarray:
    """Second-view measurement with a square-root warp.

    ``h1`` warps the view-specific coordinate, ``h2`` the common one.
    """
    x, z = latents.x, latents.z
    if which == "h1":
        if np.any(z < 0):
            raise DomainError("latent z must be nonnegative under the square root")
        return np.column_stack([scales.lx2 * x, scales.lz2 * (1 - np.sqrt(z))])
    if which == "h2":
        if np.any(x < 0):
            raise DomainError("latent x must be nonnegative under the square root")
        return np.column_stack([scales.lx1 * (1 - np.sqrt(x)), scales.lz2 * z])
    raise ValidationError(f"unknown measurement {which!r}")


def gen_nonlinear(n: int, which: str, scales: ScaleSet = ScaleSet(), seed=None):
    lat = sample_latents(n, seed, 0.0, 1.0)
    s1 = np.column_stack([scales.lx1 * lat.x, scales.ly1 * lat.y])
    return s1, nonlinear_measurement(lat, which, scales), lat


def gen_three_flat(n: int, seed=None):
    """Three views sharing x with one private coordinate each, all unit scale."""
    rng = np.random.default_rng(seed)
    x, y, z, w = rng.uniform(-0.5, 0.5, size=(4, n))
    return np.column_stack([x, y]), np.column_stack([x, z]), np.column_stack([x, w]), x


def convex_hull_point(k1, k2, k3, t1: float, t2: float):
    return geodesic_point(geodesic_point(k1, k2, t1), k3, t2)


def convex_hull_spectra(k1, k2, k3, n_t: int, count: int) -> np.ndarray:
    """Leading eigenvalues over a (t1, t2) grid, shape (n_t, n_t, count)."""
    grid = np.linspace(0.0, 1.0, n_t)
    edge = GeodesicPath(as_spd(k1), as_spd(k2))
    k3 = as_spd(k3)
    out = np.empty((n_t, n_t, count))
    for i, t1 in enumerate(grid):
        inner = GeodesicPath(as_spd(edge.at(float(t1))), k3)
        for j, t2 in enumerate(grid):
            out[i, j] = inner.spectrum(float(t2), count).values
    return out


def effective_length(scales: tuple[float, float], epsilons: tuple[float, float], t: float) -> float:
    """sqrt(b1 b2 / ((1-t) b1 + t b2)) with b = length / epsilon."""
    b1 = scales[0] / epsilons[0]
    b2 = scales[1] / epsilons[1]
    if min(b1, b2) <= 0:
        raise ValidationError("scales and epsilons must be positive")
    return float(np.sqrt(b1 * b2 / ((1 - t) * b1 + t * b2)))
