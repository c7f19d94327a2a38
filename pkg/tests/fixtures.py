"""Small constructed instances shared by several test files."""

import numpy as np

from geoflow.evfd import FlowDiagram, uniform_grid

from oracles import random_orthogonal

FIRST_SWITCH, SECOND_SWITCH = 0.06, 0.88


def crossing_diagram(n_t=200, n=6, wobble=0.0, seed=0, lift=0.0):
    """Two eigenpairs with fixed vectors whose eigenvalues cross at 0.06 and 0.88.

    With ``wobble`` > 0 each vector pair is rotated in its own plane by a random
    angle up to ``wobble`` radians at every grid point. A ``lift`` of 0.2 or more
    raises the first eigenvalue clear of the second, so nothing crosses.
    Returns the diagram and the expected reference-to-column permutations.
    """
    rng = np.random.default_rng(seed)
    basis = random_orthogonal(rng, n)[:, :2]
    grid = uniform_grid(n_t)
    values = np.empty((n_t, 2))
    vectors = np.empty((n_t, n, 2))
    expected = np.empty((n_t, 2), dtype=int)
    for i, t in enumerate(grid):
        first = 0.5 + lift + 0.3 * (t - FIRST_SWITCH) * (t - SECOND_SWITCH)
        second = 0.5
        angle = wobble * rng.uniform(-1, 1)
        c, s = np.cos(angle), np.sin(angle)
        u = basis @ np.array([[c, -s], [s, c]])
        if first >= second:
            values[i] = (first, second)
            vectors[i] = u
            expected[i] = (0, 1)
        else:
            values[i] = (second, first)
            vectors[i] = u[:, ::-1]
            expected[i] = (1, 0)
    return FlowDiagram(grid, values, vectors, has_trivial=False), expected


def commuting_pair(rng, n, low=0.05, high=1.0):
    v = random_orthogonal(rng, n)
    m1 = np.sort(rng.uniform(low, high, n))[::-1]
    m2 = rng.uniform(low, high, n)
    return (v * m1) @ v.T, (v * m2) @ v.T, v, m1, m2


def near_common_pair(rng, n, eps, direction=None):
    """K2 shares a perturbed copy of K1's eigenvectors, V2 = orth(V1 + eps E)."""
    v1 = random_orthogonal(rng, n)
    e = direction if direction is not None else rng.standard_normal((n, n))
    e = e / np.linalg.norm(e)
    q, r = np.linalg.qr(v1 + eps * e)
    v2 = q * np.sign(np.diag(r))
    m1 = np.linspace(1.0, 0.2, n)
    m2 = np.linspace(0.9, 0.3, n)
    return (v1 * m1) @ v1.T, (v2 * m2) @ v2.T, v1, m1, m2
