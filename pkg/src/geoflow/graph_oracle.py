"""Exact cycle-graph model with closed-form spectra.

Two views share a cycle graph G_x of odd size n; their private cycles G_y and
G_z have odd size m and are related by a fixed node permutation. Every quantity
here has an analytic counterpart, which makes the model a reference for the
geodesic, the flow diagram and the commonality machinery.

Node and eigenvector indices r, x, y, k, l are 1-based, following the
column-stack map r(x, y) = (x - 1) m + y. Arrays are 0-based as usual, so
column r of an array is ``[:, r - 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, OutOfRange, ValidationError
from .spd_geometry import GeodesicPath, SPDKernel, evd, symmetrize

ALPHAS = (0.1, 0.2, 0.5)
_TINY_DIST = 1e-300


def check_odd(size: int, name: str = "size") -> int:
    size = int(size)
    if size < 3 or size % 2 == 0:
        raise ValidationError(f"{name} must be an odd integer >= 3, got {size}")
    return size


def cycle_affinity(size: int) -> np.ndarray:
    """Ones on the diagonal, 1/2 between ring neighbours."""
    size = check_odd(size)
    a = np.eye(size)
    idx = np.arange(size)
    a[idx, (idx + 1) % size] = 0.5
    a[idx, (idx - 1) % size] = 0.5
    return a


def cycle_kernel(size: int) -> np.ndarray:
    return cycle_affinity(size) / 2.0


def cycle_eigenvalue(k, size: int):
    return 0.5 * (1.0 + np.cos(2.0 * np.pi * (np.asarray(k) - 1) / size))


def phase(k, size: int):
    """pi/2 for the upper half of the indices (sine modes), 0 otherwise."""
    return 0.5 * np.pi * np.floor(np.asarray(k) / ((size + 1) / 2 + 1))


def cycle_eigenvector(k: int, size: int) -> np.ndarray:
    check_odd(size)
    if not 1 <= k <= size:
        raise IndexOutOfRange(f"k={k} outside 1..{size}")
    x = np.arange(1, size + 1)
    scale = 1.0 if k == 1 else np.sqrt(2.0)
    return scale / np.sqrt(size) * np.cos(2.0 * np.pi * (k - 1) * (x - 1) / size + phase(k, size))


def cycle_eigenbasis(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvector columns for k = 1..size, in index order."""
    ks = np.arange(1, size + 1)
    return cycle_eigenvalue(ks, size), np.column_stack([cycle_eigenvector(int(k), size) for k in ks])


def index_map(x: int, y: int, m: int, n: int | None = None) -> int:
    if not 1 <= y <= m or x < 1 or (n is not None and x > n):
        raise OutOfRange(f"(x, y) = ({x}, {y}) outside the grid")
    return (x - 1) * m + y


def inverse_index_map(r: int, m: int, n: int | None = None) -> tuple[int, int]:
    if r < 1 or (n is not None and r > n * m):
        raise OutOfRange(f"r={r} outside the grid")
    return 1 + (r - 1) // m, 1 + (r - 1) % m


def product_affinity(n: int, m: int) -> np.ndarray:
    check_odd(n, "n")
    check_odd(m, "m")
    return np.kron(cycle_affinity(n), np.eye(m)) + np.kron(np.eye(n), cycle_affinity(m))


def product_kernel(n: int, m: int) -> np.ndarray:
    """Row sums of the product affinity are all 4, so the two-step
    normalization reduces to dividing by 4."""
    return product_affinity(n, m) / 4.0


def analytic_product_spectrum(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (mu_x + mu_y) / 2 and Kronecker-product eigenvectors, column
    r - 1 for r = r(k, l)."""
    mx, vx = cycle_eigenbasis(check_odd(n, "n"))
    my, vy = cycle_eigenbasis(check_odd(m, "m"))
    values = 0.5 * (mx[:, None] + my[None, :]).ravel()
    return values, np.kron(vx, vy)


def common_indices(n: int, m: int) -> np.ndarray:
    """1-based r with y(r) = 1."""
    return np.arange(n) * m + 1


@dataclass(frozen=True)
class Permutation:
    """Bijection on m nodes; ``images[j]`` is the 0-based image of node j."""

    images: np.ndarray

    def __post_init__(self):
        images = np.asarray(self.images, dtype=int)
        if images.ndim != 1 or not np.array_equal(np.sort(images), np.arange(images.size)):
            raise ValidationError("images must be a permutation of 0..m-1")
        object.__setattr__(self, "images", images)

    @property
    def m(self) -> int:
        return self.images.size

    @property
    def matrix(self) -> np.ndarray:
        p = np.zeros((self.m, self.m))
        p[self.images, np.arange(self.m)] = 1.0
        return p

    def lift(self, n: int) -> np.ndarray:
        """Same permutation applied inside every x-block."""
        return np.kron(np.eye(n), self.matrix)

    @classmethod
    def identity(cls, m: int) -> "Permutation":
        return cls(np.arange(m))

    @classmethod
    def random(cls, m: int, rng) -> "Permutation":
        return cls(rng.permutation(m))


def permuted_kernel(n: int, m: int, perm: Permutation) -> np.ndarray:
    if perm.m != m:
        raise DimensionMismatch(f"permutation acts on {perm.m} nodes, expected {m}")
    lift = perm.lift(n)
    return lift @ product_kernel(n, m) @ lift.T


@dataclass(frozen=True)
class Chain:
    """Analytic basis V, spectrum S and the matrices B, C and C_S."""

    v: np.ndarray
    s: np.ndarray
    b: np.ndarray
    c: np.ndarray
    c_s: np.ndarray


def bcm_chain(n: int, m: int, perm: Permutation) -> Chain:
    """B = V^T Pi V, C = B S B^T, C_S = S^{-1/2} C S^{-1/2} on full nm x nm matrices."""
    s, v = analytic_product_spectrum(n, m)
    if perm.m != m:
        raise DimensionMismatch(f"permutation acts on {perm.m} nodes, expected {m}")
    b = v.T @ perm.lift(n) @ v
    c = symmetrize((b * s) @ b.T)
    root = 1.0 / np.sqrt(s)
    c_s = symmetrize(c * root[:, None] * root[None, :])
    return Chain(v, s, b, c, c_s)


def recast_geodesic(chain: Chain, t: float) -> np.ndarray:
    """V S^{1/2} C_S^t S^{1/2} V^T."""
    root = np.sqrt(chain.s)
    inner = SPDKernel(chain.c_s).power(t)
    return symmetrize(chain.v @ (inner * root[:, None] * root[None, :]) @ chain.v.T)


def flow_matrix(chain: Chain, t: float) -> np.ndarray:
    root = np.sqrt(chain.s)
    return SPDKernel(chain.c_s).power(t) * root[:, None] * root[None, :]


def block_chain(n: int, m: int, perm: Permutation):
    """The same chain using its block structure: B = I_n (x) b, and C, C_S are
    block diagonal with one m x m block per x-index.

    Returns (b, c_blocks, cs_blocks, s_blocks), the last three of shape (n, m, m)
    or (n, m).
    """
    mx, _ = cycle_eigenbasis(n)
    my, vy = cycle_eigenbasis(m)
    b = vy.T @ perm.matrix @ vy
    s_blocks = 0.5 * (mx[:, None] + my[None, :])
    c_blocks = np.einsum("ij,kj,lj->kil", b, s_blocks, b)
    c_blocks = 0.5 * (c_blocks + np.transpose(c_blocks, (0, 2, 1)))
    root = 1.0 / np.sqrt(s_blocks)
    cs_blocks = c_blocks * root[:, :, None] * root[:, None, :]
    return b, c_blocks, cs_blocks, s_blocks


def mean_c_diagonal(n: int, m: int, r: int) -> float:
    """1/2 + cos(2 pi (x(r) - 1) / n) / 4 + [y(r) = 1] / 4, the large-m form of
    the permutation average of diag(C). See exact_mean_c_diagonal for finite m."""
    x, y = inverse_index_map(r, m, n)
    return 0.5 + 0.25 * np.cos(2.0 * np.pi * (x - 1) / n) + 0.25 * (y == 1)


def exact_mean_c_diagonal(n: int, m: int, r: int) -> float:
    """Permutation average of C(r, r) at finite m.

    Averaging P K_y P^T over all permutations gives
    (1/2 - 1/(2(m-1))) I + 11^T / (2(m-1)), so non-common entries sit
    1/(4(m-1)) below the large-m value.
    """
    base = mean_c_diagonal(n, m, r)
    _, y = inverse_index_map(r, m, n)
    return base if y == 1 else base - 0.25 / (m - 1)


def mean_flow_eigenvalue(n: int, m: int, r: int, t: float, exact: bool = False) -> float:
    """c_bar(r)^t mu(r)^(1-t)."""
    if not 0.0 <= t <= 1.0:
        raise OutOfRange(f"t={t} outside [0, 1]")
    x, y = inverse_index_map(r, m, n)
    mu = 0.5 * (cycle_eigenvalue(x, n) + cycle_eigenvalue(y, m))
    c = exact_mean_c_diagonal(n, m, r) if exact else mean_c_diagonal(n, m, r)
    return float(c**t * mu ** (1.0 - t))


def c_offdiag_bound(alpha: float, m: int) -> float:
    return float(np.sqrt(1.0 / (32.0 * (m - 1))) / alpha)


def inner_product_bound(alpha: float, m: int) -> float:
    return float(np.sqrt(2.0 / m) / alpha)


def _block_power(blocks: np.ndarray, t: float) -> np.ndarray:
    values, vectors = np.linalg.eigh(blocks)
    values = np.maximum(values, np.finfo(float).tiny)
    return np.einsum("kij,kj,klj->kil", vectors, values**t, vectors)


def jensen_gap(mean_blocks: np.ndarray, power_mean_blocks: np.ndarray, t: float) -> float:
    """||C_bar_S^t - mean(C_S^t)||_F^2 / ||C_bar_S^t||_F^2 over block-diagonal
    matrices stored as (n, m, m)."""
    ref = _block_power(mean_blocks, t)
    return float(np.sum((ref - power_mean_blocks) ** 2) / np.sum(ref**2))


@dataclass(frozen=True)
class MonteCarloSummary:
    n: int
    m: int
    trials: int
    seed: int | None
    diag_mean: np.ndarray  # (nm,) sample mean of diag(C)
    diag_sem: np.ndarray  # standard error of that mean
    c_tail: dict  # alpha -> largest per-entry frequency of |C_ij| >= alpha, i != j
    b_tail: dict  # alpha -> largest per-entry frequency of |b_ll'| >= alpha, l, l' > 1
    ts: np.ndarray
    jensen: np.ndarray
    rayleigh_mean: np.ndarray  # (len(ts), nm) mean of v_r^T gamma(t) v_r


def monte_carlo(n: int = 11, m: int = 31, trials: int = 2000, seed=0,
                ts=(0.0, 0.25, 0.5, 0.75, 1.0), alphas=ALPHAS) -> MonteCarloSummary:
    """Statistics of the chain over uniformly random permutations.

    Trials run in index order from one seeded generator, so results are
    reproducible for a given seed.
    """
    check_odd(n, "n")
    check_odd(m, "m")
    rng = np.random.default_rng(seed)
    ts = np.asarray(ts, dtype=float)
    diag_sum = np.zeros((n, m))
    diag_sq = np.zeros((n, m))
    c_hits = {a: np.zeros((n, m, m)) for a in alphas}
    b_hits = {a: np.zeros((m - 1, m - 1)) for a in alphas}
    c_mean = np.zeros((n, m, m))
    power_mean = np.zeros((len(ts), n, m, m))
    off = ~np.eye(m, dtype=bool)
    for _ in range(trials):
        b, c_blocks, cs_blocks, s_blocks = block_chain(n, m, Permutation.random(m, rng))
        d = np.diagonal(c_blocks, axis1=1, axis2=2)
        diag_sum += d
        diag_sq += d**2
        c_mean += c_blocks
        for a in alphas:
            c_hits[a] += (np.abs(c_blocks) >= a) & off
            b_hits[a] += np.abs(b[1:, 1:]) >= a
        values, vectors = np.linalg.eigh(cs_blocks)
        values = np.maximum(values, np.finfo(float).tiny)
        for i, t in enumerate(ts):
            power_mean[i] += np.einsum("kij,kj,klj->kil", vectors, values**t, vectors)
    mean = diag_sum / trials
    var = np.maximum(diag_sq / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    power_mean /= trials
    mx, _ = cycle_eigenbasis(n)
    my, _ = cycle_eigenbasis(m)
    s_blocks = 0.5 * (mx[:, None] + my[None, :])
    # large-m mean of C_S, to measure the Jensen gap against
    c_bar = np.array([[mean_c_diagonal(n, m, index_map(x, y, m)) for y in range(1, m + 1)]
                      for x in range(1, n + 1)])
    cs_bar = np.zeros((n, m, m))
    cs_bar[:, np.arange(m), np.arange(m)] = c_bar / s_blocks
    jensen = np.array([jensen_gap(cs_bar, power_mean[i], t) for i, t in enumerate(ts)])
    # Rayleigh quotients of the analytic eigenvectors: diag of S^1/2 C_S^t S^1/2
    root = np.sqrt(s_blocks)
    rayleigh = np.diagonal(power_mean, axis1=2, axis2=3) * (root**2)[None]
    return MonteCarloSummary(
        n, m, trials, seed, mean.ravel(), np.sqrt(var / trials).ravel(),
        {a: float(c_hits[a].max() / trials) for a in alphas},
        {a: float(b_hits[a].max() / trials) for a in alphas},
        ts, jensen, rayleigh.reshape(len(ts), n * m),
    )


def multiplicity_groups(values, rel_tol: float = 1e-9) -> list[list[int]]:
    """Groups of 0-based positions of ``values`` (any order) that tie within
    ``rel_tol``, each group sorted, groups ordered by decreasing value."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(-values, kind="stable")
    groups, current = [], [int(order[0])]
    for prev, idx in zip(order[:-1], order[1:]):
        if abs(values[prev] - values[idx]) <= rel_tol * max(abs(values[prev]), 1.0):
            current.append(int(idx))
        else:
            groups.append(sorted(current))
            current = [int(idx)]
    groups.append(sorted(current))
    return groups


def common_columns(vectors: np.ndarray, n: int, m: int, threshold: float = 0.5) -> np.ndarray:
    """0-based columns of ``vectors`` whose energy lies mostly in the span of
    the common (y = 1) analytic eigenvectors."""
    _, v = analytic_product_spectrum(n, m)
    basis = v[:, common_indices(n, m) - 1]
    return np.flatnonzero(np.sum((basis.T @ vectors) ** 2, axis=0) > threshold)


def diffusion_distance_decomposition(gamma_t, steps: int, p1: int, p2: int,
                                     common) -> tuple[float, float]:
    """Squared diffusion distance after ``steps`` applications of gamma_t split
    into the part carried by the ``common`` eigenvector columns (0-based, in
    descending eigenvalue order) and the rest.

    ``p1`` and ``p2`` are 0-based node indices.
    """
    m = gamma_t.matrix if hasattr(gamma_t, "matrix") else np.asarray(gamma_t, dtype=float)
    size = m.shape[0]
    for p in (p1, p2):
        if not 0 <= p < size:
            raise IndexOutOfRange(f"node {p} outside 0..{size - 1}")
    common = np.asarray(sorted(set(int(c) for c in common)), dtype=int)
    if common.size and (common.min() < 0 or common.max() >= size):
        raise IndexOutOfRange("common set refers to missing eigenvectors")
    eig = evd(m)
    terms = eig.values ** (2 * steps) * (eig.vectors[p1] - eig.vectors[p2]) ** 2
    mask = np.zeros(size, dtype=bool)
    mask[common] = True
    return float(terms[mask].sum()), float(terms[~mask].sum())


def direct_diffusion_distance_sq(gamma_t, steps: int, p1: int, p2: int) -> float:
    m = gamma_t.matrix if hasattr(gamma_t, "matrix") else np.asarray(gamma_t, dtype=float)
    rows = np.zeros((2, m.shape[0]))
    rows[0, p1] = rows[1, p2] = 1.0
    for _ in range(steps):
        rows = rows @ m
    return float(np.sum((rows[0] - rows[1]) ** 2))


def _check(passed, **values) -> dict:
    return {"passed": bool(passed), **values}


def verify_graph(n: int = 11, m: int = 31, trials: int = 2000, seed=0, alphas=ALPHAS,
                 t_flow: float = 0.5, t_distance: float = 0.25, steps: int = 50) -> dict:
    """Run every closed-form check on the cycle model; JSON-ready dictionary.

    Analytic sides come from the cosine formulas only, numerical sides from
    dense eigendecompositions, geodesics and Monte Carlo over permutations.
    """
    check_odd(n, "n")
    check_odd(m, "m")
    report = {"n": n, "m": m, "trials": trials, "seed": seed, "checks": {}}
    checks = report["checks"]

    values, vectors = analytic_product_spectrum(n, m)
    kernel = product_kernel(n, m)
    numeric = evd(kernel)
    err_values = float(np.abs(np.sort(values)[::-1] - numeric.values).max())
    err_vectors = float(np.abs(kernel @ vectors - vectors * values).max())
    err_orth = float(np.abs(vectors.T @ vectors - np.eye(n * m)).max())
    checks["spectrum"] = _check(max(err_values, err_vectors, err_orth) <= 1e-9, values=err_values,
                                residual=err_vectors, orthogonality=err_orth)

    groups = multiplicity_groups(values)
    sizes = {}
    for g in groups:
        for idx in g:
            x, y = inverse_index_map(idx + 1, m, n)
            sizes[idx] = (len(g), 1 + (x > 1) + (y > 1) + (x > 1 and y > 1))
    checks["multiplicity"] = _check(all(a == b for a, b in sizes.values()),
                                    fourfold=sum(len(g) == 4 for g in groups))

    rng = np.random.default_rng(seed)
    perm = Permutation.random(m, rng)
    chain = bcm_chain(n, m, perm)
    r32 = index_map(2, 1, m) if n >= 2 else 1
    c32 = float(chain.c[r32 - 1, r32 - 1])
    checks["c_entry"] = _check(abs(c32 - mean_c_diagonal(n, m, r32)) <= 1e-3, r=r32, value=c32,
                               expected=float(mean_c_diagonal(n, m, r32)))
    b_block = chain.b[:m, :m]
    block_err = max(
        float(np.abs(chain.b - np.kron(np.eye(n), b_block)).max()),
        float(abs(b_block[0, 0] - 1.0)),
        float(np.abs(b_block[0, 1:]).max()),
        float(np.abs(b_block[1:, 0]).max()),
    )
    checks["b_structure"] = _check(block_err <= 1e-12, error=block_err)

    path_err = 0.0
    path = GeodesicPath(SPDKernel(kernel), SPDKernel(permuted_kernel(n, m, perm)))
    for t in np.linspace(0.0, 1.0, 5):
        path_err = max(path_err, float(np.abs(path.at(float(t)) - recast_geodesic(chain, float(t))).max()))
    checks["recast"] = _check(path_err <= 1e-8, error=path_err)

    ts = sorted({0.0, 0.25, 0.5, 0.75, 1.0, float(t_flow)})
    mc = monte_carlo(n, m, trials, seed, ts, alphas)
    large_m = np.array([mean_c_diagonal(n, m, r) for r in range(1, n * m + 1)])
    exact = np.array([exact_mean_c_diagonal(n, m, r) for r in range(1, n * m + 1)])
    random_part = mc.diag_sem > 0
    for name, ref in (("mean_c_large_m", large_m), ("mean_c_exact", exact)):
        dev = np.abs(mc.diag_mean - ref)
        z = np.where(random_part, dev / np.where(random_part, mc.diag_sem, 1.0), 0.0)
        fixed_err = float(dev[~random_part].max()) if np.any(~random_part) else 0.0
        checks[name] = _check(z.max() <= 3.0 and fixed_err <= 1e-9, max_sigma=float(z.max()),
                              outside=int(np.sum(z > 3.0)), entries=int(z.size), fixed_error=fixed_err)
    checks["tail_c"] = _check(all(mc.c_tail[a] <= c_offdiag_bound(a, m) for a in alphas),
                              frequency={str(a): mc.c_tail[a] for a in alphas},
                              bound={str(a): c_offdiag_bound(a, m) for a in alphas})
    checks["tail_inner"] = _check(all(mc.b_tail[a] <= inner_product_bound(a, m) for a in alphas),
                                  frequency={str(a): mc.b_tail[a] for a in alphas},
                                  bound={str(a): inner_product_bound(a, m) for a in alphas})
    checks["jensen"] = _check(float(mc.jensen.max()) < 0.05, gap=[float(g) for g in mc.jensen],
                              ts=[float(t) for t in mc.ts])

    r_flow = index_map(1, m // 2, m)
    i_flow = ts.index(float(t_flow))
    observed = float(mc.rayleigh_mean[i_flow, r_flow - 1])
    predicted = mean_flow_eigenvalue(n, m, r_flow, t_flow)
    checks["flow_eigenvalue"] = _check(abs(observed - predicted) <= 0.05 * predicted, r=r_flow,
                                       t=float(t_flow), observed=observed, predicted=predicted)

    if n >= 9 and m >= 19:
        gamma = recast_geodesic(chain, t_distance)
        eig = evd(gamma)
        common = common_columns(eig.vectors, n, m)
        p1, p2, p3 = (index_map(6, 16, m) - 1, index_map(6, 19, m) - 1, index_map(9, 16, m) - 1)
        parts = {}
        worst = 0.0
        for label, q in (("same_x", p2), ("other_x", p3)):
            com, rest = diffusion_distance_decomposition(gamma, steps, p1, q, common)
            direct = direct_diffusion_distance_sq(gamma, steps, p1, q)
            worst = max(worst, abs(com + rest - direct) / max(direct, _TINY_DIST))
            parts[label] = {"common": com, "specific": rest, "direct": direct}
        checks["distance_split"] = _check(worst <= 1e-6 and parts["same_x"]["common"] <= 1e-12 * max(
            parts["same_x"]["direct"], _TINY_DIST), relative_error=worst, pairs=parts, t=float(t_distance),
            steps=steps, common_count=int(common.size))
    report["all_passed"] = all(c["passed"] for c in checks.values())
    return report

