# cython: language_level=3
"""Compiled geometry kernels. Semantics match ``nearopt._pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY, sqrt

cnp.import_array()


def points_in_halfspaces(double[:, ::1] G, double[::1] h, double[:, ::1] P, double tol):
    cdef Py_ssize_t n = P.shape[0], k = G.shape[0], d = G.shape[1]
    cdef Py_ssize_t i, r, j
    cdef double s, lim
    out = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    for i in range(n):
        for r in range(k):
            s = 0.0
            for j in range(d):
                s += G[r, j] * P[i, j]
            lim = h[r] + tol * (1.0 + fabs(h[r]))
            if s > lim:
                o[i] = 0
                break
    return out


cdef inline double _det3(double a0, double a1, double a2,
                         double b0, double b1, double b2,
                         double c0, double c1, double c2) nogil:
    return a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0)


def enumerate_vertices(double[:, ::1] G, double[::1] h, double tol):
    """Feasible intersections of every 2 (2-D) or 3 (3-D) constraint planes."""
    cdef Py_ssize_t k = G.shape[0], d = G.shape[1]
    cdef Py_ssize_t a, b, c, r
    cdef double det, x0, x1, x2, s
    cdef bint ok
    out = []
    if d == 2:
        for a in range(k):
            for b in range(a + 1, k):
                det = G[a, 0] * G[b, 1] - G[a, 1] * G[b, 0]
                if fabs(det) < 1e-12:
                    continue
                x0 = (h[a] * G[b, 1] - G[a, 1] * h[b]) / det
                x1 = (G[a, 0] * h[b] - h[a] * G[b, 0]) / det
                ok = True
                for r in range(k):
                    s = G[r, 0] * x0 + G[r, 1] * x1
                    if s > h[r] + tol * (1.0 + fabs(h[r])):
                        ok = False
                        break
                if ok:
                    out.append((x0, x1))
    elif d == 3:
        for a in range(k):
            for b in range(a + 1, k):
                for c in range(b + 1, k):
                    det = _det3(G[a, 0], G[a, 1], G[a, 2], G[b, 0], G[b, 1], G[b, 2],
                                G[c, 0], G[c, 1], G[c, 2])
                    if fabs(det) < 1e-12:
                        continue
                    x0 = _det3(h[a], G[a, 1], G[a, 2], h[b], G[b, 1], G[b, 2], h[c], G[c, 1], G[c, 2]) / det
                    x1 = _det3(G[a, 0], h[a], G[a, 2], G[b, 0], h[b], G[b, 2], G[c, 0], h[c], G[c, 2]) / det
                    x2 = _det3(G[a, 0], G[a, 1], h[a], G[b, 0], G[b, 1], h[b], G[c, 0], G[c, 1], h[c]) / det
                    ok = True
                    for r in range(k):
                        s = G[r, 0] * x0 + G[r, 1] * x1 + G[r, 2] * x2
                        if s > h[r] + tol * (1.0 + fabs(h[r])):
                            ok = False
                            break
                    if ok:
                        out.append((x0, x1, x2))
    else:
        raise ValueError("vertex enumeration supports dimension 2 or 3 only")
    return np.array(out, dtype=float).reshape(-1, d)


def hull_facets_3d(double[:, ::1] P, double tol):
    """Supporting planes through every point triple that has all points on one side."""
    cdef Py_ssize_t m = P.shape[0]
    cdef Py_ssize_t i, j, k, r
    cdef double ux, uy, uz, vx, vy, vz, nx, ny, nz, nn, off, s
    cdef bint le, ge
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            ux = P[j, 0] - P[i, 0]; uy = P[j, 1] - P[i, 1]; uz = P[j, 2] - P[i, 2]
            for k in range(j + 1, m):
                vx = P[k, 0] - P[i, 0]; vy = P[k, 1] - P[i, 1]; vz = P[k, 2] - P[i, 2]
                nx = uy * vz - uz * vy
                ny = uz * vx - ux * vz
                nz = ux * vy - uy * vx
                nn = sqrt(nx * nx + ny * ny + nz * nz)
                if nn < 1e-12:
                    continue
                nx /= nn; ny /= nn; nz /= nn
                off = nx * P[i, 0] + ny * P[i, 1] + nz * P[i, 2]
                le = True
                ge = True
                for r in range(m):
                    s = nx * P[r, 0] + ny * P[r, 1] + nz * P[r, 2] - off
                    if s > tol:
                        le = False
                    if s < -tol:
                        ge = False
                    if not le and not ge:
                        break
                if le:
                    out.append((nx, ny, nz, off))
                elif ge:
                    out.append((-nx, -ny, -nz, -off))
    return np.array(out, dtype=float).reshape(-1, 4)


def hit_and_run_chain(double[:, ::1] G, double[::1] h, double[::1] x0,
                      double[:, ::1] dirs, double[::1] us):
    """Run one hit-and-run step per row of ``dirs``; returns every visited state."""
    cdef Py_ssize_t n = dirs.shape[0], k = G.shape[0], d = G.shape[1]
    cdef Py_ssize_t step, r, j
    cdef double lo, hi, a, s, t
    chain = np.empty((n, d), dtype=float)
    cdef double[:, ::1] out = chain
    x_arr = np.array(x0, dtype=float)
    cdef double[::1] x = x_arr
    for step in range(n):
        lo = -INFINITY
        hi = INFINITY
        for r in range(k):
            a = 0.0
            s = h[r]
            for j in range(d):
                a += G[r, j] * dirs[step, j]
                s -= G[r, j] * x[j]
            if s < 0.0:
                s = 0.0
            if a > 1e-14:
                if s / a < hi:
                    hi = s / a
            elif a < -1e-14:
                if s / a > lo:
                    lo = s / a
        if lo == -INFINITY or hi == INFINITY:
            raise ValueError("unbounded chord: region is not bounded")
        t = lo + us[step] * (hi - lo)
        for j in range(d):
            x[j] += t * dirs[step, j]
            out[step, j] = x[j]
    return chain


def dedupe_mask(double[:, ::1] P, double tol):
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1]
    cdef Py_ssize_t i, j, q, nk = 0
    cdef double diff
    cdef bint dup
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    kept = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] kp = kept
    for i in range(n):
        dup = False
        for j in range(nk):
            diff = 0.0
            for q in range(d):
                diff = fabs(P[i, q] - P[kp[j], q])
                if diff > tol:
                    break
            if diff <= tol:
                dup = True
                break
        if not dup:
            o[i] = 1
            kp[nk] = i
            nk += 1
    return out
