"""Independent reference computations used to check the package.

Everything here avoids the package's own solvers and kernels: LPs go
through ``scipy.optimize.linprog`` in dense form, vertices come from
brute-force row combinations.
"""

import itertools

import numpy as np
from scipy.optimize import linprog

TRI_VERTICES = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 0.5], [0.5, 1.0]])


def hull_distance(P, z):
    """Inf-norm distance from z to hull(P): min r, -r <= P'lam - z <= r."""
    P = np.atleast_2d(np.asarray(P, float))
    m, n = P.shape
    c = np.r_[np.zeros(m), 1.0]
    A = np.block([[P.T, -np.ones((n, 1))], [-P.T, -np.ones((n, 1))]])
    b = np.r_[z, -np.asarray(z, float)]
    res = linprog(c, A_ub=A, b_ub=b, A_eq=np.r_[np.ones(m), 0.0][None, :], b_eq=[1.0],
                  bounds=[(0, None)] * (m + 1), method="highs")
    assert res.status == 0
    return float(res.fun)


def vertices(G, h, tol=1e-9):
    """All vertices of {z : G z <= h} by solving every n-subset of rows."""
    G, h = np.asarray(G, float), np.asarray(h, float)
    n = G.shape[1]
    out = []
    for rows in itertools.combinations(range(len(G)), n):
        A = G[list(rows)]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        v = np.linalg.solve(A, h[list(rows)])
        if np.all(G @ v <= h + tol * (1 + np.abs(h))):
            if not any(np.max(np.abs(v - w)) < 1e-8 for w in out):
                out.append(v)
    return np.array(out).reshape(-1, n)


def maxmin_distance(G, h, P):
    """Max over the vertices of {G z <= h} of the distance to hull(P)."""
    V = vertices(G, h)
    d = [hull_distance(P, v) for v in V]
    i = int(np.argmax(d))
    return d[i], V[i]


def polygon_area(V):
    """Area of the convex hull of 2-D points by angular sort and shoelace."""
    V = np.asarray(V, float)
    c = V.mean(axis=0)
    V = V[np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))]
    x, y = V[:, 0], V[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def dense_model(problem):
    a = problem.arrays
    return (a.c, a.A_ub.toarray(), a.b_ub, a.A_eq.toarray(), a.b_eq,
            list(zip(a.lower, [None if np.isinf(u) else u for u in a.upper])))


def value_function(problem, z):
    """min c'x over the model with S x = z (no budget); None when infeasible."""
    c, A, b, F, d, bounds = dense_model(problem)
    S = problem.S.toarray()
    bounds = [(lo if np.isfinite(lo) else None, up) for lo, up in bounds]
    res = linprog(c, A_ub=A if len(A) else None, b_ub=b if len(A) else None,
                  A_eq=np.vstack([F, S]), b_eq=np.r_[d, z], bounds=bounds, method="highs")
    return float(res.fun) if res.status == 0 else None


def near_optimal_distance(problem, z):
    """Inf-norm distance from z to the projected near-optimal set."""
    c, A, b, F, d, bounds = dense_model(problem)
    S = problem.S.toarray()
    n_x, n_z = len(c), S.shape[0]
    bounds = [(lo if np.isfinite(lo) else None, up) for lo, up in bounds] + [(0, None)]
    A_ub = np.vstack([np.c_[A, np.zeros((len(A), 1))], np.r_[c, 0.0][None, :],
                      np.c_[S, -np.ones((n_z, 1))], np.c_[-S, -np.ones((n_z, 1))]])
    b_ub = np.r_[b, problem.budget, z, -np.asarray(z, float)]
    res = linprog(np.r_[np.zeros(n_x), 1.0], A_ub=A_ub, b_ub=b_ub, A_eq=np.c_[F, np.zeros((len(F), 1))]
                  if len(F) else None, b_eq=d if len(F) else None, bounds=bounds, method="highs")
    assert res.status == 0
    return float(res.fun)


def near_optimal_extremes(problem, n_dirs, rng):
    """Points of the projected near-optimal set found by maximising random directions over it."""
    c, A, b, F, d, bounds = dense_model(problem)
    S = problem.S.toarray()
    A_ub = np.vstack([A, c[None, :]]) if len(A) else c[None, :]
    b_ub = np.r_[b, problem.budget]
    bounds = [(lo if np.isfinite(lo) else None, up) for lo, up in bounds]
    out = []
    for w in rng.normal(size=(n_dirs, S.shape[0])):
        res = linprog(-(w @ S), A_ub=A_ub, b_ub=b_ub, A_eq=F if len(F) else None, b_eq=d if len(F) else None,
                      bounds=bounds, method="highs")
        out.append(S @ res.x)
    return np.array(out)
