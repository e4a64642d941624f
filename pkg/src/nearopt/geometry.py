"""Convex-hull helpers shared by the volume and sampling code."""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DegenerateHullError


def affine_basis(P: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Origin and orthonormal basis (columns) of the affine span of the rows of ``P``."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    origin = P.mean(axis=0)
    if len(P) == 1:
        return origin, np.zeros((P.shape[1], 0))
    _, s, vt = np.linalg.svd(P - origin, full_matrices=False)
    scale = max(1.0, float(np.max(np.abs(P))))
    rank = int(np.sum(s > tol * scale * max(1, len(P)) ** 0.5))
    return origin, vt[:rank].T


def affine_dim(P: np.ndarray, tol: float = 1e-9) -> int:
    return affine_basis(P, tol)[1].shape[1]


def hull_2d(P: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull vertices (monotone chain), collinear points dropped."""
    pts = sorted(set(map(tuple, np.round(np.asarray(P, dtype=float), 12))))
    if len(pts) <= 2:
        return np.array(pts, dtype=float).reshape(-1, 2)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-15:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-15:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def polygon_area(V: np.ndarray) -> float:
    """Shoelace area of a simple polygon given in order."""
    if len(V) < 3:
        return 0.0
    x, y = V[:, 0], V[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _facet_area(F: np.ndarray, normal: np.ndarray) -> float:
    # orthonormal basis of the facet plane, then the planar hull
    u = np.cross(normal, [1.0, 0.0, 0.0])
    if np.linalg.norm(u) < 1e-6:
        u = np.cross(normal, [0.0, 1.0, 0.0])
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return polygon_area(hull_2d(np.column_stack([F @ u, F @ v])))


def polytope_volume_3d(P: np.ndarray, tol: float = 1e-9) -> float:
    """Volume of the hull of 3-D points as pyramids from the centroid over each facet."""
    P = np.asarray(P, dtype=float)
    if len(P) < 4 or affine_dim(P) < 3:
        return 0.0
    normals, offsets = kernels.hull_facets_3d(P, tol)
    c = P.mean(axis=0)
    vol = 0.0
    for n, off in zip(normals, offsets):
        on = np.abs(P @ n - off) <= tol * max(1.0, abs(off)) * 10
        height = off - float(n @ c)
        vol += _facet_area(P[on], n) * height / 3.0
    return vol


def hull_halfspaces(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(G, h)`` with hull(P) = {z : G z <= h}; needs a full-dimensional hull.

    Two and three dimensions use the package's own routines; higher
    dimensions use Qhull.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[1]
    if affine_dim(P) < n:
        raise DegenerateHullError("point hull has no interior")
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([P.max(), -P.min()])
    if n == 2:
        V = hull_2d(P)
        E = np.roll(V, -1, axis=0) - V
        G = np.column_stack([E[:, 1], -E[:, 0]])
        G /= np.linalg.norm(G, axis=1, keepdims=True)
        return G, np.einsum("ij,ij->i", G, V)
    if n == 3:
        return kernels.hull_facets_3d(P, 1e-9)
    from scipy.spatial import ConvexHull

    eq = ConvexHull(P).equations
    return eq[:, :-1], -eq[:, -1]
