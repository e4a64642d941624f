"""Design generation once the approximations are good enough.

Uniform samples come from hit-and-run over an explicit halfspace form of the
target region; diverse designs from a max-min L1 dispersion MILP.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import DegenerateHullError, MembershipError, RegionError
from .geometry import affine_basis, hull_halfspaces
from .model import ExplorationProblem
from .oracle import closest_near_optimal
from .regions import HullDistance, InnerApprox, OuterApprox, outer_contains
from .solver import DEFAULT_SETTINGS, LpProblem, SolverSettings, solve_lp, solve_milp

MEMBERSHIP_TOL = 1e-6


@dataclass
class SampleBatch:
    points: np.ndarray
    method: str
    seed: int | None = None
    burn_in: int = 0
    thinning: int = 1
    target: str = "inner"
    #: dimension of the sampled set (smaller than n_z in affine-span mode)
    dim: int = 0
    #: greedy max-min L1 distances, one per point (diverse mode)
    deltas: np.ndarray | None = None


# ---------------------------------------------------------------------------
# start point


def chebyshev_center(outer: OuterApprox, settings: SolverSettings = DEFAULT_SETTINGS) -> tuple[np.ndarray, float]:
    """Centre and radius of the largest inscribed inf-norm ball.

    The optimal centres usually form a face; the returned centre is the
    midpoint of that face's coordinate extremes, which keeps symmetric
    regions symmetric.
    """
    G, h = outer.inequalities()
    n = outer.n_z
    A = sp.csr_matrix(np.hstack([G, np.abs(G).sum(axis=1, keepdims=True)]))
    lower = np.append(np.full(n, -np.inf), 0.0)
    upper = np.full(n + 1, np.inf)
    c = np.zeros(n + 1)
    c[-1] = 1.0
    sol = solve_lp(LpProblem(c, A, h, lower=lower, upper=upper, maximize=True), settings=settings)
    if not sol.ok:
        raise RegionError("outer approximation is empty")
    r = float(sol.primal[-1])
    lower[-1] = max(0.0, r - 1e-9 * max(1.0, r))
    ends = []
    for j in range(n):
        for sense in (False, True):
            cj = np.zeros(n + 1)
            cj[j] = 1.0
            s = solve_lp(LpProblem(cj, A, h, lower=lower, upper=upper, maximize=sense), settings=settings)
            ends.append(s.primal[j] if s.ok else sol.primal[j])
    centre = 0.5 * (np.array(ends[0::2]) + np.array(ends[1::2]))
    return centre, max(0.0, r)


# ---------------------------------------------------------------------------
# hit-and-run


def _chain(G, h, x0, n_steps, rng):
    dirs = rng.standard_normal((n_steps, len(x0)))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    us = rng.random(n_steps)
    return kernels.hit_and_run_chain(G, h, x0, dirs, us)


def hit_and_run(region: InnerApprox | OuterApprox, k: int, burn_in: int | None = None, thin: int = 10,
                seed: int = 0, affine_span: bool = False, verify: bool = True,
                settings: SolverSettings = DEFAULT_SETTINGS) -> SampleBatch:
    """``k`` approximately uniform samples from the inner hull or the outer region.

    Chords are computed in closed form against a halfspace description:
    the outer region has one already, the inner hull's facets are computed
    from its points.  The chain starts at the point centroid (inner) or the
    Chebyshev centre (outer).  A zero-volume inner hull raises
    :class:`DegenerateHullError` unless ``affine_span`` is set, in which case
    sampling happens inside the hull's affine span.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(region, OuterApprox):
        target = "outer"
        n = region.n_z
        G, h = region.inequalities()
        x0, r = chebyshev_center(region, settings)
        if r <= 1e-12:
            raise DegenerateHullError("outer region has no interior")
        origin, B = np.zeros(n), np.eye(n)
    else:
        target = "inner"
        if region.m < 1:
            raise RegionError("inner approximation is empty")
        n = region.n_z
        origin, B = affine_basis(region.points)
        if B.shape[1] < n and not affine_span:
            raise DegenerateHullError(
                f"inner hull spans {B.shape[1]} of {n} dimensions; use affine-span mode")
        Y = (region.points - origin) @ B
        x0 = np.zeros(B.shape[1])
        if B.shape[1]:
            G, h = hull_halfspaces(Y)
            x0 = Y.mean(axis=0)
    dim = B.shape[1]
    burn_in = 100 * n if burn_in is None else burn_in
    if dim == 0:
        pts = np.repeat(origin[None, :], k, axis=0)
    else:
        chain = _chain(G, h, x0, burn_in + k * thin, rng)
        pts = chain[burn_in + thin - 1::thin][:k]
        if target == "inner":
            pts = origin + pts @ B.T
    if verify:
        _verify(region, pts, settings)
    return SampleBatch(pts, "hit-and-run", seed, burn_in, thin, target, dim)


def _verify(region, pts, settings):
    if isinstance(region, OuterApprox):
        bad = [i for i, p in enumerate(pts) if not outer_contains(region, p, MEMBERSHIP_TOL)]
    else:
        dist = HullDistance(region.points, settings)
        bad = [i for i, p in enumerate(pts) if dist(p).distance > MEMBERSHIP_TOL]
    if bad:
        raise MembershipError(f"{len(bad)} samples failed the membership check (first: row {bad[0]})")


# ---------------------------------------------------------------------------
# dispersion


def most_distant_design(outer: OuterApprox, cloud, rel_gap: float = 1e-9, abs_gap: float = 1e-7,
                        time_limit: float = 600.0,
                        settings: SolverSettings = DEFAULT_SETTINGS) -> tuple[np.ndarray, float]:
    """Point of the outer region maximising the minimum L1 distance to ``cloud``.

    ``max delta`` s.t. ``delta <= sum_j (p_ij + q_ij)`` and
    ``z_j - c_ij = p_ij - q_ij`` with a binary per term choosing which of
    ``p_ij, q_ij`` may be nonzero.  Each term is bounded by the farthest box
    face from ``c_ij``, which is exact for points of the box.
    """
    C = np.atleast_2d(np.asarray(cloud, dtype=float))
    m, n = C.shape
    if m == 0:
        raise ValueError("cloud must be nonempty")
    if n != outer.n_z:
        raise ValueError("cloud dimension does not match the region")
    lo, hi = outer.lower, outer.upper
    M = np.maximum(np.maximum(hi[None, :] - C, C - lo[None, :]), 0.0).ravel()
    mn = m * n
    # columns: z (n), delta, p (mn), q (mn), s (mn)
    i_d = n
    o_p, o_q, o_s = n + 1, n + 1 + mn, n + 1 + 2 * mn
    n_col = n + 1 + 3 * mn
    ar = np.arange(mn)
    zcol = np.tile(np.arange(n), m)
    A_eq = sp.csr_matrix((np.concatenate([np.ones(mn), -np.ones(mn), np.ones(mn)]),
                          (np.tile(ar, 3), np.concatenate([zcol, o_p + ar, o_q + ar]))), shape=(mn, n_col))
    b_eq = C.ravel()
    rows, cols, vals = [], [], []
    # p - M s <= 0 ; q + M s <= M
    rows += [ar, ar, mn + ar, mn + ar]
    cols += [o_p + ar, o_s + ar, o_q + ar, o_s + ar]
    vals += [np.ones(mn), -M, np.ones(mn), M]
    b = [np.zeros(mn), M]
    # delta - sum_j (p_ij + q_ij) <= 0
    r0 = 2 * mn
    pt = np.repeat(np.arange(m), n)
    rows += [r0 + np.arange(m), r0 + pt, r0 + pt]
    cols += [np.full(m, i_d), o_p + ar, o_q + ar]
    vals += [np.ones(m), -np.ones(mn), -np.ones(mn)]
    b.append(np.zeros(m))
    G = np.array([hs.normal for hs in outer.halfspaces]).reshape(-1, n)
    r1 = r0 + m
    for g_i, g in enumerate(G):
        nz = np.flatnonzero(g)
        rows.append(np.full(len(nz), r1 + g_i))
        cols.append(nz)
        vals.append(g[nz])
    b.append(np.array([hs.offset for hs in outer.halfspaces], dtype=float))
    A_ub = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(r1 + len(G), n_col))
    c = np.zeros(n_col)
    c[i_d] = 1.0
    lower = np.concatenate([lo, [0.0], np.zeros(3 * mn)])
    upper = np.concatenate([hi, [M.reshape(m, n).sum(axis=1).min()], M, M, np.ones(mn)])
    integrality = np.zeros(n_col, dtype=np.int8)
    integrality[o_s:] = 1
    prob = LpProblem(c, A_ub, np.concatenate(b), A_eq, b_eq, lower, upper, integrality, maximize=True)
    sol = solve_milp(prob, rel_gap, abs_gap, time_limit, 1, settings)
    if sol.incumbent is None:
        raise RegionError(f"dispersion MILP returned no solution ({sol.status.value})")
    z = sol.incumbent[:n]
    return z, float(np.min(np.abs(C - z).sum(axis=1)))


def diverse_set(outer: OuterApprox, k: int, seed_cloud, problem: ExplorationProblem | None = None,
                tol: float = 1e-6, settings: SolverSettings = DEFAULT_SETTINGS, **milp_kw) -> SampleBatch:
    """Greedy farthest-point designs.

    Each design is the most distant point of the outer region from the
    growing cloud.  With ``problem`` the design is checked against the
    near-optimal set and replaced by its closest near-optimal point when it
    lies more than ``tol`` outside.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    cloud = [np.asarray(p, dtype=float) for p in np.atleast_2d(np.asarray(seed_cloud, dtype=float))]
    pts, deltas = [], []
    for _ in range(k):
        z, delta = most_distant_design(outer, np.array(cloud), settings=settings, **milp_kw)
        if problem is not None:
            fr = closest_near_optimal(problem, z, settings)
            if fr.delta > tol:
                z = fr.z_feasible
        pts.append(z)
        deltas.append(delta)
        cloud.append(z)
    return SampleBatch(np.array(pts), "diverse", None, 0, 1, "outer", outer.n_z, np.array(deltas))


def nearest_cloud_point(z, cloud) -> tuple[int, float]:
    """Index of and L1 distance to the cloud point nearest ``z``."""
    d = np.abs(np.atleast_2d(np.asarray(cloud, dtype=float)) - np.asarray(z, dtype=float)).sum(axis=1)
    i = int(np.argmin(d))
    return i, float(d[i])


def write_samples_csv(path, batch: SampleBatch, names) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + (["delta"] if batch.deltas is not None else []))
        for i, p in enumerate(batch.points):
            row = [repr(float(v)) for v in p]
            if batch.deltas is not None:
                row.append(repr(float(batch.deltas[i])))
            w.writerow(row)
