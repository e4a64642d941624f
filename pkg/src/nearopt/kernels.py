"""Geometry kernels with a compiled core and a pure-Python fallback.

The Cython extension ``nearopt._ckernels`` is used when it was built and
``NEAROPT_PURE_PYTHON`` is unset; otherwise ``nearopt._pykernels``.
``BACKEND`` names the implementation in use.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("NEAROPT_PURE_PYTHON", "") in ("1", "true"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def _c(a):
    return np.ascontiguousarray(a, dtype=float)


def points_in_halfspaces(G, h, P, tol=1e-9, impl=None):
    """Mask of rows of ``P`` with ``G p <= h`` (relative slack ``tol``)."""
    impl = impl or _impl
    P = _c(np.atleast_2d(P))
    return impl.points_in_halfspaces(_c(G), _c(h), P, float(tol)).astype(bool)


def enumerate_vertices(G, h, tol=1e-9, impl=None):
    """Vertices of ``{z : G z <= h}`` in 2 or 3 dimensions (deduplicated)."""
    impl = impl or _impl
    V = impl.enumerate_vertices(_c(G), _c(h), float(tol))
    return dedupe_points(V, 1e-7)


def hull_facets_3d(P, tol=1e-9, impl=None):
    """Facet halfspaces ``(normal, offset)`` of the hull of 3-D points."""
    impl = impl or _impl
    F = impl.hull_facets_3d(_c(P), float(tol))
    if len(F) == 0:
        return np.zeros((0, 3)), np.zeros(0)
    F = dedupe_points(F, 1e-7)
    return F[:, :3], F[:, 3]


def hit_and_run_chain(G, h, x0, dirs, us, impl=None):
    impl = impl or _impl
    return impl.hit_and_run_chain(_c(G), _c(h), _c(x0), _c(dirs), _c(us))


def dedupe_points(P, tol, impl=None):
    """Drop rows within ``tol`` (inf-norm) of an earlier kept row; order preserved."""
    impl = impl or _impl
    P = np.asarray(P, dtype=float)
    if len(P) == 0:
        return P
    P = _c(np.atleast_2d(P))
    return P[impl.dedupe_mask(P, float(tol)).astype(bool)]
