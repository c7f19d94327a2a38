"""Randomized invariants. Hypothesis picks sizes, seeds and path positions; the
matrices themselves come from a seeded numpy generator."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow import baselines_metrics as bm
from geoflow import cmr_embedding as cm
from geoflow import diffusion_kernel as dk
from geoflow import evfd
from geoflow import graph_oracle as go
from geoflow import spd_geometry as sg
from geoflow import synthetic as sy

from oracles import geodesic_left_form, random_orthogonal, random_spd

seeds = st.integers(0, 2**32 - 1)
orders = st.integers(2, 20)
times = st.floats(0.0, 1.0)
odd = st.sampled_from([3, 5, 7, 9, 11])

SETTINGS = settings(max_examples=60, deadline=None)


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@SETTINGS
@given(seeds, orders)
def test_geodesic_endpoints(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_spd(rng, n), random_spd(rng, n)
    assert _rel(sg.geodesic_point(a, b, 0.0).matrix, a) <= 1e-10
    assert _rel(sg.geodesic_point(a, b, 1.0).matrix, b) <= 1e-10


@SETTINGS
@given(seeds, orders, times)
def test_geodesic_symmetry(seed, n, t):
    rng = np.random.default_rng(seed)
    a, b = random_spd(rng, n), random_spd(rng, n)
    fwd = sg.geodesic_point(a, b, t).matrix
    assert _rel(fwd, sg.geodesic_point(b, a, 1 - t).matrix) <= 1e-9


@SETTINGS
@given(seeds, orders, times)
def test_geodesic_congruence(seed, n, t):
    rng = np.random.default_rng(seed)
    a, b = random_spd(rng, n, 0.5), random_spd(rng, n, 0.5)
    g = random_orthogonal(rng, n) * np.exp(0.3 * rng.standard_normal(n))
    lhs = sg.geodesic_point(g @ a @ g.T, g @ b @ g.T, t).matrix
    rhs = g @ sg.geodesic_point(a, b, t).matrix @ g.T
    assert _rel(lhs, rhs) <= 1e-8


@SETTINGS
@given(seeds, orders, times)
def test_commuting_eigenvalues_interpolate_geometrically(seed, n, t):
    rng = np.random.default_rng(seed)
    v = random_orthogonal(rng, n)
    m1, m2 = rng.uniform(0.05, 2.0, n), rng.uniform(0.05, 2.0, n)
    got = sg.geodesic_point((v * m1) @ v.T, (v * m2) @ v.T, t).eig.values
    want = np.sort(m1 ** (1 - t) * m2**t)[::-1]
    assert np.abs(got - want).max() <= 1e-10


@SETTINGS
@given(seeds, st.integers(2, 12), times)
def test_geodesic_forms_agree(seed, n, t):
    rng = np.random.default_rng(seed)
    a, b = random_spd(rng, n, 0.5), random_spd(rng, n, 0.5)
    assert _rel(sg.geodesic_point(a, b, t).matrix, geodesic_left_form(a, b, t)) <= 1e-8


@SETTINGS
@given(seeds, st.integers(3, 9), st.integers(1, 3), times)
def test_spsd_path_keeps_rank_and_endpoints(seed, n, p, t):
    rng = np.random.default_rng(seed)
    p = min(p, n - 1)
    q1, q2 = random_orthogonal(rng, n)[:, :p], random_orthogonal(rng, n)[:, :p]
    a = sg.SPSDKernel(q1, random_spd(rng, p, 0.5))
    b = sg.SPSDKernel(q2, random_spd(rng, p, 0.5))
    path = sg.SPSDPath(a, b)
    mid = path.at(t).matrix
    values = np.linalg.eigvalsh(mid)[::-1]
    assert values[p - 1] > 1e-8 * values[0] and np.all(np.abs(values[p:]) <= 1e-10 * values[0])
    assert np.abs(path.at(0.0).matrix - a.matrix).max() <= 1e-8
    assert np.abs(path.at(1.0).matrix - b.matrix).max() <= 1e-8


@SETTINGS
@given(seeds, st.integers(5, 40), st.integers(1, 3), st.floats(0.05, 5.0))
def test_kernel_bundle_is_stochastic_and_similar(seed, n, dim, scale):
    rng = np.random.default_rng(seed)
    data = rng.uniform(0, 1, (n, dim))
    bundle = dk.build_kernel(data, scale * dk.median_scale(data))
    assert np.abs(bundle.operator.sum(axis=1) - 1).max() <= 1e-12
    a = np.sort(np.linalg.eigvals(bundle.operator).real)
    k = np.sort(np.linalg.eigvalsh(bundle.kernel))
    assert np.abs(a - k).max() <= 1e-9


@SETTINGS
@given(seeds, st.integers(2, 15))
def test_smoothness_monotone_in_ell(seed, n):
    rng = np.random.default_rng(seed)
    k = random_spd(rng, n)
    target = rng.standard_normal((2, n))
    scores = bm.smoothness_profile(k, target, range(1, n + 1))
    assert np.all(np.diff(scores) >= -1e-12)
    assert scores[-1] == 1.0 and np.all((scores >= 0) & (scores <= 1))


@SETTINGS
@given(seeds, st.integers(2, 12), times)
def test_linear_path_dominates_geodesic_on_shared_directions(seed, n, t):
    rng = np.random.default_rng(seed)
    v = random_orthogonal(rng, n)
    m1, m2 = rng.uniform(0.05, 2.0, n), rng.uniform(0.05, 2.0, n)
    k1, k2 = (v * m1) @ v.T, (v * m2) @ v.T
    lin = bm.linear_interpolation_point(k1, k2, t).matrix
    geo = sg.geodesic_point(k1, k2, t).matrix
    along_lin = np.einsum("ij,ik,kj->j", v, lin, v)
    along_geo = np.einsum("ij,ik,kj->j", v, geo, v)
    assert np.all(along_lin >= along_geo - 1e-12)


@SETTINGS
@given(odd, odd)
def test_index_map_is_a_bijection(n, m):
    images = [go.index_map(x, y, m, n) for x in range(1, n + 1) for y in range(1, m + 1)]
    assert sorted(images) == list(range(1, n * m + 1))
    assert all(go.index_map(*go.inverse_index_map(r, m, n), m, n) == r for r in images)


@SETTINGS
@given(seeds, st.integers(3, 40), st.integers(1, 5))
def test_arclength_scores_bounded_and_zero_when_log_linear(seed, n_t, k):
    rng = np.random.default_rng(seed)
    t = evfd.uniform_grid(n_t)[:, None]
    straight = np.exp(rng.standard_normal(k) + t * rng.standard_normal(k))
    d = evfd.FlowDiagram(evfd.uniform_grid(n_t), straight, None, has_trivial=False)
    assert np.all(np.abs(cm.commonality_arclength(d, evfd.identity_trajectories(d))) <= 1e-9)
    bent = np.exp(3 * rng.standard_normal((n_t, k)))
    d = evfd.FlowDiagram(evfd.uniform_grid(n_t), bent, None, has_trivial=False)
    w = cm.commonality_arclength(d, evfd.identity_trajectories(d))
    assert np.all((w >= 0) & (w <= 1))


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(10, 200))
def test_generators_are_seed_deterministic(seed, n):
    scales = sy.ScaleSet(1.0, 2.0, 3.0, 4.0)
    first, second = sy.gen_flat_2d(n, scales, seed), sy.gen_flat_2d(n, scales, seed)
    assert np.array_equal(first[0], second[0]) and np.array_equal(first[1], second[1])
    assert np.array_equal(first[2].x, second[2].x)
