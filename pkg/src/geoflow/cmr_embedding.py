"""Commonality scores, the common-to-specific ratio curve and common-manifold embeddings."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllNonCommon,
    EmptyCommonSet,
    NoConvergence,
    NumericalUnderflow,
    RankTooHigh,
    TooFewGridPoints,
    ValidationError,
)
from .evfd import FlowDiagram, TrajectorySet, uniform_grid
from .spd_geometry import SPDKernel, SPSDKernel, evd

ARCLENGTH = "arclength"
DISPERSION = "dispersion"
DEFAULT_THRESHOLD = 0.2
_TINY = 1e-300


def commonality_arclength(diagram: FlowDiagram, traj: TrajectorySet) -> np.ndarray:
    """Relative excess of each trajectory's log-eigenvalue arc length over its chord."""
    if diagram.n_t < 3:
        raise TooFewGridPoints("arc length needs at least 3 grid points")
    logs = np.log(traj.values(diagram))
    dt = np.diff(diagram.grid)[:, None]
    arc = np.sqrt(dt**2 + np.diff(logs, axis=0) ** 2).sum(axis=0)
    span = diagram.grid[-1] - diagram.grid[0]
    chord = np.sqrt(span**2 + (logs[-1] - logs[0]) ** 2)
    return np.clip((arc - chord) / arc, 0.0, 1.0)


def _dense(point) -> np.ndarray:
    if isinstance(point, (SPDKernel, SPSDKernel)):
        return point.matrix
    return np.asarray(point, dtype=float)


def path_product_eigenvectors(path, n_t: int) -> np.ndarray:
    """Unit eigenvectors of gamma(t_N) ... gamma(t_1), columns ordered by
    decreasing eigenvalue magnitude.

    The running product is rescaled after every factor; eigenvectors do not
    depend on the scale.
    """
    grid = uniform_grid(n_t)
    prod = None
    for t in grid:
        factor = _dense(path.at(float(t)))
        prod = factor if prod is None else factor @ prod
        scale = np.max(np.abs(prod))
        if not np.isfinite(scale) or scale <= _TINY:
            raise NumericalUnderflow(f"path product collapsed at t={t:.4f}")
        prod = prod / scale
    values, vectors = np.linalg.eig(prod)
    order = np.argsort(-np.abs(values), kind="stable")
    vectors = np.real(vectors[:, order])
    norms = np.linalg.norm(vectors, axis=0)
    norms[norms == 0] = 1.0
    return vectors / norms


def _apply(path, t: float, block: np.ndarray) -> np.ndarray:
    if hasattr(path, "apply"):
        return path.apply(t, block)
    return _dense(path.at(t)) @ block


def _positive_qr(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q, r = np.linalg.qr(block)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, r * signs[:, None]


@dataclass(frozen=True)
class ProductBasis:
    """Leading eigenvectors of a path product together with the orthonormal
    basis of the subspace they span and the ambient order.

    Directions outside ``span`` are not resolved individually; the entropy
    treats any mass there as spread evenly over the remaining n - m directions.
    """

    vectors: np.ndarray
    span: np.ndarray
    log_values: np.ndarray
    n: int
    passes: int = 1


def _blocks(coupling: np.ndarray, tol: float) -> list[tuple[int, int]]:
    """Contiguous index ranges joined by coupling entries above ``tol``."""
    m = coupling.shape[0]
    reach = np.arange(m)
    rows, cols = np.nonzero(np.abs(coupling) > tol)
    for j, l in zip(rows, cols):
        lo, hi = min(j, l), max(j, l)
        reach[lo] = max(reach[lo], hi)
    out, start, end = [], 0, 0
    for j in range(m):
        end = max(end, reach[j])
        if j == end:
            out.append((start, end + 1))
            start = end = j + 1
    return out


def _real_unit(v: np.ndarray) -> np.ndarray:
    # same phase convention as a dense eigensolver: largest entry real
    v = v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
    v = np.real(v)
    return v / np.linalg.norm(v)


def _prefix_leak(turn: np.ndarray) -> np.ndarray:
    """Entry j: how far the first j+1 new columns stick out of the span of the
    first j+1 old ones, given turn = old^T new with orthonormal columns."""
    gone = np.sqrt(np.maximum(1.0 - np.cumsum(turn**2, axis=0), 0.0))
    return np.array([gone[j, : j + 1].max() for j in range(turn.shape[0])])


def _settled_prefix(blocks, leak, log_diag, settle: float, spread: float = 30.0) -> int:
    """Length of the longest leading run of whole blocks that spans an invariant
    subspace; a block whose eigenvalue magnitudes still differ by more than
    exp(spread) has not separated and ends the run."""
    keep = 0
    for lo, hi in blocks:
        if np.ptp(log_diag[lo:hi]) > spread:
            break
        if leak[hi - 1] <= settle:
            keep = hi
    return keep


def product_subspace_eigenvectors(path, n_t: int, count: int, max_passes: int = 50,
                                  tol: float = 1e-8, settle: float = 1e-6) -> ProductBasis:
    """Leading ``count`` eigenvectors of gamma(t_N) ... gamma(t_1) by orthogonal
    iteration through the factors.

    Each factor is applied to an n x m block and re-orthonormalized, so the
    spread of eigenvalue magnitudes only shows up in the logged diagonals of
    the triangular factors. The triangular product is kept row-normalized with
    unit diagonal; its off-diagonal entries shrink rather than overflow.
    Eigenvalues of equal modulus (complex pairs) stay coupled in small blocks
    that are solved directly. Complex eigenvectors are reported by their real
    part, as with a dense solver. Fewer than ``count`` columns come back when
    the trailing ones have not settled within ``max_passes``.
    """
    grid = uniform_grid(n_t)
    n = path.n
    limit = getattr(path, "rank", n)
    if not 1 <= count <= limit:
        raise RankTooHigh(f"count={count} outside 1..{limit}")
    q0 = path.spectrum(float(grid[0]), count).vectors
    passes = last_keep = 0
    for _ in range(max_passes):
        q = q0
        log_diag = np.zeros(count)
        unit = np.eye(count)
        for t in grid:
            q, r = _positive_qr(_apply(path, float(t), q))
            d = np.diag(r)
            if np.any(d <= 0):
                raise NumericalUnderflow(f"path product lost rank at t={t:.4f}")
            scaled = r / d[:, None]
            # conjugate by the running diagonal: entry (j, l) picks up D_l / D_j
            with np.errstate(over="ignore", under="ignore"):
                ratio = np.exp(np.clip(log_diag[None, :] - log_diag[:, None], -745.0, 700.0))
            unit = np.triu(scaled * ratio) @ unit
            log_diag = log_diag + np.log(d)
        if not np.all(np.isfinite(unit)):
            raise NumericalUnderflow("triangular product left the floating-point range")
        turn = q0.T @ q
        leak = _prefix_leak(turn) if count < n else np.zeros(count)
        blocks = _blocks(turn - np.diag(np.diag(turn)), tol)
        keep = _settled_prefix(blocks, leak, log_diag, settle)
        start, q0 = q0, q
        passes += 1
        if keep == count or (passes >= 3 and keep == last_keep > 0):
            break
        last_keep = keep
    if keep == 0:
        raise NoConvergence(f"product subspace did not settle (leak {leak[0]:.2e})")
    # keep the longest leading run of columns that spans an invariant subspace
    # and does not cut through a coupled block
    blocks = [(lo, hi) for lo, hi in blocks if hi <= keep]
    turn, unit, log_diag, start = turn[:keep, :keep], unit[:keep, :keep], log_diag[:keep], start[:, :keep]

    # eigenvectors of turn @ diag(exp(log_diag)) @ unit, block back substitution
    scaled_blocks = []
    for lo, hi in blocks:
        ref = log_diag[lo:hi].max()
        scaled_blocks.append((lo, hi, ref, turn[lo:hi, lo:hi] * np.exp(log_diag[lo:hi] - ref)[None, :]))
    vectors, logs = [], []
    for c, (lo, hi, ref, mc) in enumerate(scaled_blocks):
        values, local = np.linalg.eig(mc @ unit[lo:hi, lo:hi])
        for val, z in zip(values, local.T):
            y = np.zeros(keep, dtype=complex)
            y[lo:hi] = z
            for blo, bhi, bref, mb in reversed(scaled_blocks[:c]):
                rhs = -mb @ (unit[blo:bhi, bhi:hi] @ y[bhi:hi])
                lhs = mb @ unit[blo:bhi, blo:bhi] - val * np.exp(ref - bref) * np.eye(bhi - blo)
                y[blo:bhi] = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
            vectors.append(_real_unit(start @ y))
            logs.append(np.log(max(abs(val), _TINY)) + ref)
    order = np.argsort(-np.array(logs), kind="stable")
    return ProductBasis(np.column_stack(vectors)[:, order], start, np.array(logs)[order], n, passes)


def dispersion_entropy(vectors: np.ndarray, basis) -> np.ndarray:
    """Entropy of the squared, normalized inner products of each column of
    ``vectors`` against the product eigenvectors in ``basis``; lies in [0, log n].

    ``basis`` is either a full (n, n) array of eigenvectors or a ProductBasis.
    """
    if isinstance(basis, ProductBasis):
        c = (basis.vectors.T @ vectors) ** 2
        rest = basis.n - basis.vectors.shape[1]
        outside = np.maximum(1.0 - np.sum((basis.span.T @ vectors) ** 2, axis=0), 0.0) if rest else None
    else:
        c = (np.asarray(basis).T @ vectors) ** 2
        rest, outside = 0, None
    total = c.sum(axis=0) + (outside if rest else 0.0)
    total = np.maximum(total, _TINY)
    c = c / total
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(c > 0, c * np.log(c), 0.0).sum(axis=0)
        if rest:
            share = outside / total
            h = h - np.where(share > 0, share * np.log(share / rest), 0.0)
    return np.maximum(h, 0.0)


def commonality_dispersion(path, n_t: int, t0: float, n_e: int | None = None,
                           basis: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Scores and eigenvalues for the leading ``n_e`` eigenvectors of gamma(t0).

    ``basis`` may carry precomputed product eigenvectors to avoid recomputing them.
    """
    if basis is None:
        basis = path_product_eigenvectors(path, n_t)
    eig = evd(_dense(path.at(float(t0))), n_e)
    return dispersion_entropy(eig.vectors, basis), eig.values


def dispersion_scores(diagram: FlowDiagram, basis: np.ndarray) -> np.ndarray:
    """Per grid point and diagram column dispersion score, shape (n_t, k+1)."""
    if diagram.eigenvectors is None:
        raise ValidationError("dispersion scores need a diagram with eigenvectors")
    return np.stack([dispersion_entropy(v, basis) for v in diagram.eigenvectors])


@dataclass(frozen=True)
class CommonalityReport:
    estimator: str
    scores: np.ndarray  # raw scores: per trajectory (arclength) or per grid point and column (dispersion)
    weights: np.ndarray  # (n_t, k+1) scores mapped to diagram columns, normalized to [0, 1]
    bound: float
    cmr: np.ndarray
    t_star: float | None
    t_star_index: int | None
    common_set: tuple[int, ...]
    noncommon_set: tuple[int, ...]
    threshold: float
    diagnostics: tuple[str, ...] = field(default_factory=tuple)


def _grid_weights(diagram: FlowDiagram, scores: np.ndarray, estimator: str,
                  traj: TrajectorySet | None) -> tuple[np.ndarray, float]:
    scores = np.asarray(scores, dtype=float)
    if estimator == ARCLENGTH:
        if scores.shape != (diagram.n_components,):
            raise ValidationError("arclength scores must hold one value per trajectory")
        perms = traj.permutations if traj is not None else np.tile(np.arange(diagram.n_components), (diagram.n_t, 1))
        weights = np.empty((diagram.n_t, diagram.n_components))
        np.put_along_axis(weights, perms, np.broadcast_to(scores, perms.shape), axis=1)
        return weights, 1.0
    if estimator == DISPERSION:
        if scores.shape != diagram.eigenvalues.shape:
            raise ValidationError("dispersion scores must match the diagram shape")
        n = diagram.eigenvectors.shape[1] if diagram.eigenvectors is not None else None
        if n is None:
            raise ValidationError("dispersion weights need the ambient order from eigenvectors")
        bound = float(np.log(n))
        return scores / bound, bound
    raise ValidationError(f"unknown estimator {estimator!r}")


def cmr_curve(diagram: FlowDiagram, scores, estimator: str, traj: TrajectorySet | None = None,
              threshold: float = DEFAULT_THRESHOLD) -> CommonalityReport:
    """Soft-weighted ratio sum((1-w) mu) / sum(w mu) over non-trivial columns at
    every grid point, its argmax, and the hard split at the argmax."""
    weights, bound = _grid_weights(diagram, scores, estimator, traj)
    weights = np.clip(weights, 0.0, 1.0)
    start = diagram.first_nontrivial
    mu = diagram.eigenvalues[:, start:]
    w = weights[:, start:]
    num = ((1.0 - w) * mu).sum(axis=1)
    den = (w * mu).sum(axis=1)
    diagnostics = []
    with np.errstate(divide="ignore", invalid="ignore"):
        cmr = np.where(den > 1e-12 * np.maximum(num, _TINY), num / den, np.inf)
    if np.all(np.isinf(cmr)):
        diagnostics.append("every component scored common; the ratio has no finite maximum")
        t_idx = None
    else:
        t_idx = int(np.argmax(cmr))
        if np.isinf(cmr[t_idx]):
            diagnostics.append("ratio is unbounded at some grid points")
    if t_idx is None:
        common, noncommon = tuple(range(start, diagram.n_components)), ()
    else:
        flags = weights[t_idx, start:] < threshold
        cols = np.arange(start, diagram.n_components)
        common = tuple(int(c) for c in cols[flags])
        noncommon = tuple(int(c) for c in cols[~flags])
        if not common:
            diagnostics.append("no component passed the commonality threshold")
    return CommonalityReport(
        estimator, np.asarray(scores, dtype=float), weights, bound, cmr,
        None if t_idx is None else float(diagram.grid[t_idx]), t_idx,
        common, noncommon, threshold, tuple(diagnostics),
    )


def hard_cmr(diagram: FlowDiagram, weights: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Unweighted ratio of common to non-common eigenvalue mass per grid point."""
    start = diagram.first_nontrivial
    common = np.asarray(weights)[:, start:] < threshold
    mu = diagram.eigenvalues[:, start:]
    if not np.any(common):
        raise AllNonCommon("no component is common at any grid point")
    den = np.where(~common, mu, 0.0).sum(axis=1)
    num = np.where(common, mu, 0.0).sum(axis=1)
    with np.errstate(divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)


@dataclass(frozen=True)
class Embedding:
    coordinates: np.ndarray
    t: float | None
    indices: tuple[int, ...]


TOP_ELL = "top-ell"
COMMON_ONLY = "common-only"


def common_embedding(gamma_tstar, report: CommonalityReport | None, ell: int = 2,
                     mode: str = TOP_ELL) -> Embedding:
    """Sample coordinates from eigenvectors of gamma(t*): columns 1..ell (0-based,
    skipping the trivial one) or the columns of the common set."""
    if isinstance(gamma_tstar, SPSDKernel):
        available = gamma_tstar.rank
        spectrum = gamma_tstar.spectrum
    else:
        m = _dense(gamma_tstar)
        available = m.shape[0]
        spectrum = lambda count: evd(m, count)  # noqa: E731
    if mode == TOP_ELL:
        if ell < 1 or ell + 1 > available:
            raise RankTooHigh(f"ell={ell} needs ell+1 <= {available} eigenvectors")
        indices = tuple(range(1, ell + 1))
    elif mode == COMMON_ONLY:
        if report is None or not report.common_set:
            raise EmptyCommonSet("no common components to embed")
        indices = tuple(report.common_set)
        if max(indices) + 1 > available:
            raise RankTooHigh("common set refers to unavailable eigenvectors")
    else:
        raise ValidationError(f"unknown embedding mode {mode!r}")
    eig = spectrum(max(indices) + 1)
    t = None if report is None else report.t_star
    return Embedding(np.ascontiguousarray(eig.vectors[:, list(indices)]), t, indices)
