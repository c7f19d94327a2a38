"""Eigenvalue flow diagram along an interpolation path and trajectory tracking."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BeamExhausted, GridTooCoarse, RankTooHigh, ValidationError, VectorsMissing
from .spd_geometry import GeodesicPath, SPSDKernel, SPSDPath

MULTIPLICITY_GAP = 1e-10


@dataclass(frozen=True)
class FlowDiagram:
    grid: np.ndarray  # (n_t,)
    eigenvalues: np.ndarray  # (n_t, k+1), descending per row
    eigenvectors: np.ndarray | None = None  # (n_t, n, k+1)
    geometry: str = "spd"
    rank: int | None = None
    has_trivial: bool = True

    @property
    def n_t(self) -> int:
        return len(self.grid)

    @property
    def n_components(self) -> int:
        return self.eigenvalues.shape[1]

    @property
    def first_nontrivial(self) -> int:
        return 1 if self.has_trivial else 0


def uniform_grid(n_t: int) -> np.ndarray:
    if n_t < 2:
        raise GridTooCoarse(f"need at least 2 grid points, got {n_t}")
    return np.linspace(0.0, 1.0, n_t)


def make_path(k1, k2):
    if isinstance(k1, SPSDKernel) or isinstance(k2, SPSDKernel):
        if not (isinstance(k1, SPSDKernel) and isinstance(k2, SPSDKernel)):
            raise ValidationError("both kernels must be SPSD for the fixed-rank curve")
        return SPSDPath(k1, k2)
    return GeodesicPath(k1, k2)


def diagram_along(path, n_t: int = 200, k: int = 10, keep_vectors: bool = False,
                  geometry: str = "spd", rank: int | None = None) -> FlowDiagram:
    """Sample ``path.spectrum(t, count)`` on a uniform grid."""
    grid = uniform_grid(n_t)
    count = k + 1
    limit = rank if rank is not None else path.n
    if count > limit:
        raise RankTooHigh(f"K+1={count} exceeds available eigenvalues ({limit})")
    values = np.empty((n_t, count))
    vectors = np.empty((n_t, path.n, count)) if keep_vectors else None
    for i, t in enumerate(grid):
        eig = path.spectrum(float(t), count)
        values[i] = eig.values
        if keep_vectors:
            vectors[i] = eig.vectors
    return FlowDiagram(grid, values, vectors, geometry, rank)


def compute_evfd(k1, k2, n_t: int = 200, k: int = 10, keep_vectors: bool = False) -> FlowDiagram:
    path = make_path(k1, k2)
    if isinstance(path, SPSDPath):
        return diagram_along(path, n_t, k, keep_vectors, "spsd", path.rank)
    return diagram_along(path, n_t, k, keep_vectors)


@dataclass(frozen=True)
class TrajectorySet:
    """``permutations[i, k]`` is the column of the diagram at grid point i that
    holds the trajectory whose reference (t=0) column is k."""

    permutations: np.ndarray
    log_score: float = 0.0
    notes: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)

    def values(self, diagram: FlowDiagram) -> np.ndarray:
        rows = np.arange(diagram.n_t)[:, None]
        return diagram.eigenvalues[rows, self.permutations]


def identity_trajectories(diagram: FlowDiagram) -> TrajectorySet:
    perms = np.tile(np.arange(diagram.n_components), (diagram.n_t, 1))
    return TrajectorySet(perms, notes=("untracked: sorted order used as identity",))


def _swap_moves(n_e: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Relabelings of sorted positions produced by one or by two adjacent swaps."""
    ident = np.arange(n_e)

    def swap(order, a):
        out = order.copy()
        out[[a, a + 1]] = out[[a + 1, a]]
        return out

    singles = [swap(ident, a) for a in range(n_e - 1)]
    seen = {ident.tobytes()} | {s.tobytes() for s in singles}
    doubles = []
    for a, b in itertools.permutations(range(n_e - 1), 2):
        move = swap(swap(ident, a), b)
        key = move.tobytes()
        if key not in seen:
            seen.add(key)
            doubles.append(move)
    return singles, doubles


def track_trajectories(diagram: FlowDiagram, window_l: int = 3, p1: float = 0.05, p2: float = 0.01,
                       beam: int = 64) -> TrajectorySet:
    """Most likely permutation sequence under the windowed swap model, by beam search.

    A state is the last ``window_l`` permutations. A new permutation may differ
    from the oldest one in the window by zero, one or two swaps of adjacent
    sorted positions, with prior weights 1-p1-p2, p1 and p2. Each state is scored
    by the summed absolute correlation of matched eigenvectors between the two
    ends of its window.
    """
    if diagram.eigenvectors is None:
        raise VectorsMissing("tracking needs a diagram computed with keep_vectors=True")
    if window_l < 2:
        raise ValidationError("window length must be at least 2")
    if not (p1 > 0 and p2 > 0 and p1 + p2 < 1):
        raise ValidationError("need p1 > 0, p2 > 0 and p1 + p2 < 1")
    n_t, n_e = diagram.n_t, diagram.n_components
    if beam < n_e:
        raise BeamExhausted(f"beam width {beam} is smaller than the {n_e} tracked components")

    notes = []
    ref = diagram.eigenvalues[0]
    gaps = -np.diff(ref) <= MULTIPLICITY_GAP * np.abs(ref[:-1])
    if np.any(gaps):
        msg = f"eigenvalue multiplicity at t=0 between columns {np.flatnonzero(gaps).tolist()}; reference order follows the sign convention"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    singles, doubles = _swap_moves(n_e)
    moves = np.array([np.arange(n_e)] + singles + doubles)
    log_prior = np.concatenate([
        [np.log1p(-p1 - p2)],
        np.full(len(singles), np.log(p1)),
        np.full(len(doubles), np.log(p2)),
    ])
    vecs = diagram.eigenvectors

    ident = np.arange(n_e)
    windows = np.tile(ident, (1, window_l, 1))  # (states, window_l, n_e)
    scores = np.zeros(1)
    parents, chosen = [], []
    for i in range(1, n_t):
        lag = max(i - window_l + 1, 0)
        corr = np.abs(vecs[lag].T @ vecs[i])
        # candidate next permutations relabel the sorted positions of the oldest one
        cand = moves[:, windows[:, 0, :]]  # (moves, states, n_e)
        cand = np.transpose(cand, (1, 0, 2))
        first = windows[:, 1, :]
        like = corr[first[:, None, :], cand].sum(axis=2) / n_e
        total = scores[:, None] + log_prior[None, :] + np.log(np.maximum(like, 1e-300))

        n_states, n_moves = total.shape
        new_windows = np.concatenate(
            [np.repeat(windows[:, 1:, :][:, None], n_moves, axis=1), cand[:, :, None, :]], axis=2
        ).reshape(n_states * n_moves, window_l, n_e)
        flat = total.reshape(-1)
        # deterministic order: score descending, then candidate position
        order = np.lexsort((np.arange(flat.size), -flat))
        keep, seen = [], set()
        for idx in order:
            key = new_windows[idx].tobytes()
            if key in seen:
                continue
            seen.add(key)
            keep.append(idx)
            if len(keep) == beam:
                break
        keep = np.array(keep)
        if not np.isfinite(flat[keep[0]]):
            raise BeamExhausted(f"no finite-score state at grid point {i}")
        parents.append(keep // n_moves)
        chosen.append(new_windows[keep, -1, :])
        windows = new_windows[keep]
        scores = flat[keep]

    perms = np.empty((n_t, n_e), dtype=int)
    perms[0] = ident
    best = 0
    for i in range(n_t - 1, 0, -1):
        perms[i] = chosen[i - 1][best]
        best = parents[i - 1][best]
    # perms[i] maps reference column -> diagram column
    params = {"window_l": window_l, "p1": p1, "p2": p2, "beam": beam}
    return TrajectorySet(perms, float(scores[0]), tuple(notes), params)
