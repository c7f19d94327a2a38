"""Reference computations that share no code path with the package.

Each helper reaches its answer by a different algorithm from the one it checks:
Jacobi rotations instead of LAPACK, fixed-point means instead of eigenvalue
powers, Schur-Pade matrix functions, finite differences, greedy matching,
brute-force enumeration.
"""

import itertools

import numpy as np
import scipy.linalg


def random_spd(rng, n, spread=1.0):
    g = rng.standard_normal((n, n))
    q, _ = np.linalg.qr(g)
    values = np.exp(spread * rng.standard_normal(n))
    return (q * values) @ q.T


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def jacobi_eigh(a, tol=1e-15, sweeps=100):
    """Cyclic Jacobi rotations; eigenvalues descending with matching columns."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * np.linalg.norm(a):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
                v = v @ rot
    values = np.diag(a)
    order = np.argsort(-values)
    return values[order], v[:, order]


def geometric_mean_ahm(a, b, iters=60):
    """Arithmetic-harmonic mean iteration; converges to the matrix geometric mean."""
    x, y = np.array(a, dtype=float), np.array(b, dtype=float)
    for _ in range(iters):
        x, y = (x + y) / 2, 2 * np.linalg.inv(np.linalg.inv(x) + np.linalg.inv(y))
    return (x + y) / 2


def geodesic_schur(a, b, t):
    """A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2} through Schur-based matrix functions."""
    root = np.real(scipy.linalg.sqrtm(a))
    inv_root = np.linalg.inv(root)
    inner = inv_root @ b @ inv_root
    inner = (inner + inner.T) / 2
    return np.real(root @ scipy.linalg.fractional_matrix_power(inner, t) @ root)


def geodesic_left_form(a, b, t):
    """A (A^{-1} B)^t, the non-symmetric equivalent form."""
    return np.real(a @ scipy.linalg.fractional_matrix_power(np.linalg.solve(a, b), t))


def neumann_interval_eigs(length, points, count):
    """Smallest eigenvalues of -d^2/dx^2 on [0, length] with Neumann ends, by
    cell-centred finite differences."""
    h = length / points
    main = np.full(points, 2.0)
    main[0] = main[-1] = 1.0
    lap = (np.diag(main) - np.diag(np.ones(points - 1), 1) - np.diag(np.ones(points - 1), -1)) / h**2
    return np.sort(np.linalg.eigvalsh(lap))[:count]


def greedy_match(previous, current):
    """Assign each previous column to the unused current column of largest
    absolute correlation, strongest pairs first."""
    corr = np.abs(previous.T @ current)
    k = corr.shape[0]
    out = -np.ones(k, dtype=int)
    used = set()
    for flat in np.argsort(-corr, axis=None):
        i, j = divmod(int(flat), k)
        if out[i] < 0 and j not in used:
            out[i] = j
            used.add(j)
    return out


def refined_arclength_score(f, refine=10, n_t=200):
    """(arc - chord) / arc for the curve t -> f(t) on a grid ``refine`` times finer."""
    t = np.linspace(0, 1, refine * (n_t - 1) + 1)
    y = f(t)
    arc = np.sum(np.hypot(np.diff(t), np.diff(y)))
    chord = np.hypot(1.0, y[-1] - y[0])
    return (arc - chord) / arc


def scalar_affinity(points, epsilon):
    n = len(points)
    w = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            d = sum((points[i][k] - points[j][k]) ** 2 for k in range(len(points[i])))
            w[i, j] = np.exp(-d / epsilon)
    return w


def median_pairwise_sq(points):
    vals = sorted(float(np.sum((points[i] - points[j]) ** 2))
                  for i in range(len(points)) for j in range(i + 1, len(points)))
    mid = len(vals) // 2
    return vals[mid] if len(vals) % 2 else 0.5 * (vals[mid - 1] + vals[mid])


def cycle_kernel_direct(size):
    """Ring graph kernel written out entry by entry."""
    k = np.zeros((size, size))
    for i in range(size):
        k[i, i] = 0.5
        k[i, (i + 1) % size] += 0.25
        k[i, (i - 1) % size] += 0.25
    return k


def permutation_average_kernel(n, m):
    """Average of Pi K_xy Pi^T over all m! block permutations, by enumeration."""
    kx, ky = cycle_kernel_direct(n), cycle_kernel_direct(m)
    big = np.kron(kx, np.eye(m)) / 2 + np.kron(np.eye(n), ky) / 2
    total = np.zeros_like(big)
    count = 0
    for perm in itertools.permutations(range(m)):
        p = np.zeros((m, m))
        p[list(perm), np.arange(m)] = 1
        lift = np.kron(np.eye(n), p)
        total += lift @ big @ lift.T
        count += 1
    return total / count
