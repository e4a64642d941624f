"""Pure-Python kernels; reference semantics for ``nearopt._ckernels``."""

import math

import numpy as np


def points_in_halfspaces(G, h, P, tol):
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    P = np.asarray(P, dtype=float)
    lim = h + tol * (1.0 + np.abs(h))
    if G.shape[0] == 0:
        return np.ones(len(P), dtype=np.uint8)
    return np.all(P @ G.T <= lim, axis=1).astype(np.uint8)


def _det3(a0, a1, a2, b0, b1, b2, c0, c1, c2):
    return a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0)


def _feasible(G, h, x, tol):
    for r in range(len(h)):
        if sum(G[r][j] * x[j] for j in range(len(x))) > h[r] + tol * (1.0 + abs(h[r])):
            return False
    return True


def enumerate_vertices(G, h, tol):
    G = np.asarray(G, dtype=float).tolist()
    h = np.asarray(h, dtype=float).tolist()
    k = len(G)
    d = len(G[0]) if k else 0
    out = []
    if d == 2:
        for a in range(k):
            for b in range(a + 1, k):
                det = G[a][0] * G[b][1] - G[a][1] * G[b][0]
                if abs(det) < 1e-12:
                    continue
                x = ((h[a] * G[b][1] - G[a][1] * h[b]) / det, (G[a][0] * h[b] - h[a] * G[b][0]) / det)
                if _feasible(G, h, x, tol):
                    out.append(x)
    elif d == 3:
        for a in range(k):
            for b in range(a + 1, k):
                for c in range(b + 1, k):
                    ga, gb, gc = G[a], G[b], G[c]
                    det = _det3(*ga, *gb, *gc)
                    if abs(det) < 1e-12:
                        continue
                    x = (_det3(h[a], ga[1], ga[2], h[b], gb[1], gb[2], h[c], gc[1], gc[2]) / det,
                         _det3(ga[0], h[a], ga[2], gb[0], h[b], gb[2], gc[0], h[c], gc[2]) / det,
                         _det3(ga[0], ga[1], h[a], gb[0], gb[1], h[b], gc[0], gc[1], h[c]) / det)
                    if _feasible(G, h, x, tol):
                        out.append(x)
    else:
        raise ValueError("vertex enumeration supports dimension 2 or 3 only")
    return np.array(out, dtype=float).reshape(-1, d)


def hull_facets_3d(P, tol):
    P = np.asarray(P, dtype=float).tolist()
    m = len(P)
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            u = [P[j][q] - P[i][q] for q in range(3)]
            for k in range(j + 1, m):
                v = [P[k][q] - P[i][q] for q in range(3)]
                n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
                nn = math.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
                if nn < 1e-12:
                    continue
                n = [q / nn for q in n]
                off = n[0] * P[i][0] + n[1] * P[i][1] + n[2] * P[i][2]
                le = ge = True
                for r in range(m):
                    s = n[0] * P[r][0] + n[1] * P[r][1] + n[2] * P[r][2] - off
                    if s > tol:
                        le = False
                    if s < -tol:
                        ge = False
                    if not le and not ge:
                        break
                if le:
                    out.append((n[0], n[1], n[2], off))
                elif ge:
                    out.append((-n[0], -n[1], -n[2], -off))
    return np.array(out, dtype=float).reshape(-1, 4)


def hit_and_run_chain(G, h, x0, dirs, us):
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    x = np.array(x0, dtype=float)
    chain = np.empty_like(dirs)
    for step in range(len(dirs)):
        d = dirs[step]
        a = G @ d
        s = np.maximum(h - G @ x, 0.0)
        pos = a > 1e-14
        neg = a < -1e-14
        if not pos.any() or not neg.any():
            raise ValueError("unbounded chord: region is not bounded")
        hi = np.min(s[pos] / a[pos])
        lo = np.max(s[neg] / a[neg])
        x = x + (lo + us[step] * (hi - lo)) * d
        chain[step] = x
    return chain


def dedupe_mask(P, tol):
    P = np.asarray(P, dtype=float)
    out = np.zeros(len(P), dtype=np.uint8)
    kept = []
    for i, p in enumerate(P):
        if not kept or np.min(np.max(np.abs(P[kept] - p), axis=1)) > tol:
            out[i] = 1
            kept.append(i)
    return out
