"""Compiled kernels agree with the pure-Python reference implementations."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nearopt import _pykernels, kernels
from nearopt.geometry import hull_2d, hull_halfspaces, polygon_area

ck = pytest.importorskip("nearopt._ckernels")

seeds = st.integers(0, 10_000)


def _region(rng, n, k):
    G = np.vstack([np.eye(n), -np.eye(n), rng.normal(size=(k, n))])
    h = np.concatenate([np.ones(n), np.zeros(n), rng.uniform(0.3, 1.0, size=k)])
    return G, h


@given(seeds, st.sampled_from([2, 3]), st.integers(0, 8))
def test_enumerate_vertices_equivalent(seed, n, k):
    G, h = _region(np.random.default_rng(seed), n, k)
    a = kernels.enumerate_vertices(G, h, impl=_pykernels)
    b = kernels.enumerate_vertices(G, h, impl=ck)
    assert a.shape == b.shape and np.allclose(a, b, atol=1e-12)


@given(seeds, st.integers(4, 14))
def test_hull_facets_equivalent(seed, m):
    P = np.random.default_rng(seed).random((m, 3))
    a = kernels.hull_facets_3d(P, impl=_pykernels)
    b = kernels.hull_facets_3d(P, impl=ck)
    assert np.allclose(a[0], b[0]) and np.allclose(a[1], b[1])


@given(seeds)
def test_points_in_halfspaces_and_chain_equivalent(seed):
    rng = np.random.default_rng(seed)
    G, h = _region(rng, 2, 3)
    P = rng.random((50, 2)) * 1.4 - 0.2
    assert np.array_equal(kernels.points_in_halfspaces(G, h, P, impl=_pykernels),
                          kernels.points_in_halfspaces(G, h, P, impl=ck))
    dirs = rng.normal(size=(30, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    us = rng.random(30)
    x0 = np.array([0.01, 0.01])
    a = kernels.hit_and_run_chain(G, h, x0, dirs, us, impl=_pykernels)
    b = kernels.hit_and_run_chain(G, h, x0, dirs, us, impl=ck)
    assert np.allclose(a, b, atol=1e-12)


@given(seeds)
def test_dedupe_equivalent(seed):
    P = np.round(np.random.default_rng(seed).random((60, 2)), 1)
    a = kernels.dedupe_points(P, 1e-9, impl=_pykernels)
    b = kernels.dedupe_points(P, 1e-9, impl=ck)
    assert np.array_equal(a, b)
    assert len(np.unique(a, axis=0)) == len(a)


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_unbounded_chord_rejected():
    G = np.array([[1.0, 0.0]])
    with pytest.raises(ValueError):
        _pykernels.hit_and_run_chain(G, np.ones(1), np.zeros(2), np.array([[0.0, 1.0]]), np.array([0.5]))
    with pytest.raises(ValueError):
        ck.hit_and_run_chain(G, np.ones(1), np.zeros(2), np.array([[0.0, 1.0]]), np.array([0.5]))


@given(seeds, st.integers(3, 30))
def test_hull_2d_area_and_halfspaces(seed, m):
    P = np.random.default_rng(seed).random((m, 2))
    from scipy.spatial import ConvexHull
    ref = ConvexHull(P)
    assert polygon_area(hull_2d(P)) == pytest.approx(ref.volume, rel=1e-9)
    G, h = hull_halfspaces(P)
    assert np.all(P @ G.T <= h + 1e-9)
    assert len(hull_2d(P)) == len(ref.vertices)
