"""Inner (point hull) and outer (halfspace) approximations of the near-optimal set.

Both are immutable snapshots: every update returns a new object.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import DegenerateHullError, InvalidCutError, MembershipError, RegionError
from .formulations import near_optimal_distance
from .model import ExplorationProblem
from .solver import DEFAULT_SETTINGS, LpProblem, LpSession, SolverSettings, require_optimal, solve_lp

#: inner points closer than this (inf-norm) to a stored point are duplicates
DEDUP_TOL = 1e-8
#: tolerance for verifying that a point is near-optimal
VERIFY_TOL = 1e-6

PROVENANCES = ("bound", "cost-cut", "dual-cut", "value-cut", "model-row", "mga")


@dataclass(frozen=True)
class InnerApprox:
    points: np.ndarray
    tags: tuple[str, ...] = ()
    redundant: tuple[bool, ...] = ()
    iters: tuple[int, ...] = ()

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def n_z(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Halfspace:
    """``normal' z <= offset``; stored with unit inf-norm normal."""

    normal: np.ndarray
    offset: float
    provenance: str = "dual-cut"
    iteration: int = 0

    def normalized(self) -> "Halfspace":
        scale = float(np.max(np.abs(self.normal)))
        if scale <= 0 or not np.isfinite(scale):
            raise RegionError("halfspace normal must be nonzero and finite")
        return replace(self, normal=np.asarray(self.normal, dtype=float) / scale, offset=self.offset / scale)

    def violation(self, z: np.ndarray) -> float:
        return float(self.normal @ z - self.offset)


@dataclass(frozen=True)
class OuterApprox:
    lower: np.ndarray
    upper: np.ndarray
    halfspaces: tuple[Halfspace, ...] = ()

    @property
    def n_z(self) -> int:
        return len(self.lower)

    @property
    def k(self) -> int:
        return len(self.halfspaces)

    def inequalities(self, include_box: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Stacked ``(G, h)`` with ``G z <= h``; box rows first when included."""
        n = self.n_z
        G = [h.normal for h in self.halfspaces]
        h = [hs.offset for hs in self.halfspaces]
        if include_box:
            G = list(np.eye(n)) + list(-np.eye(n)) + G
            h = list(self.upper) + list(-self.lower) + h
        return np.array(G, dtype=float).reshape(-1, n), np.array(h, dtype=float)

    def box_max(self, normal: np.ndarray) -> float:
        return float(np.sum(np.maximum(normal * self.lower, normal * self.upper)))


# ---------------------------------------------------------------------------
# inner approximation


def make_inner(points: Sequence[Sequence[float]], tags: Iterable[str] | None = None) -> InnerApprox:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    tags = tuple(tags) if tags is not None else tuple("known" for _ in range(len(P)))
    return InnerApprox(P, tags, tuple(False for _ in range(len(P))), tuple(0 for _ in range(len(P))))


@dataclass
class Membership:
    member: bool
    distance: float
    weights: np.ndarray | None = None
    separator: np.ndarray | None = None


class HullDistance:
    """Inf-norm distance to the hull of fixed points, re-solved per query.

    ``min r`` s.t. ``-r <= P'lam - z <= r``, ``sum lam = 1``, ``lam >= 0``;
    only the right-hand side depends on ``z``.  On non-membership the
    returned ``separator`` is a normal ``s`` with ``s'z > max_i s'p_i``.
    """

    def __init__(self, points: np.ndarray, settings: SolverSettings = DEFAULT_SETTINGS):
        P = np.asarray(points, dtype=float)
        self.m, self.n = P.shape
        r_col = -np.ones((self.n, 1))
        A_ub = sp.csr_matrix(np.block([[P.T, r_col], [-P.T, r_col]]))
        A_eq = sp.csr_matrix(np.append(np.ones(self.m), 0.0)[None, :])
        c = np.zeros(self.m + 1)
        c[-1] = 1.0
        lp = LpProblem(c, A_ub, np.zeros(2 * self.n), A_eq, np.ones(1), np.zeros(self.m + 1),
                       np.full(self.m + 1, np.inf))
        self.session = LpSession(lp, settings)

    def __call__(self, z: np.ndarray) -> Membership:
        z = np.asarray(z, dtype=float)
        sol = require_optimal(self.session.solve(b_ub=np.concatenate([z, -z])), "hull distance LP")
        y = sol.duals_ineq
        n = self.n
        return Membership(False, max(0.0, float(sol.objective)), sol.primal[: self.m], y[n:] - y[:n])


def hull_distance(points: np.ndarray, z: np.ndarray,
                  settings: SolverSettings = DEFAULT_SETTINGS) -> Membership:
    """Inf-norm distance from ``z`` to the hull of ``points`` via one LP (see :class:`HullDistance`)."""
    return HullDistance(points, settings)(z)


def inner_contains(inner: InnerApprox, z: np.ndarray, tol: float = VERIFY_TOL,
                   settings: SolverSettings = DEFAULT_SETTINGS) -> Membership:
    """Membership of ``z`` in the hull of the stored points.

    Returns the convex weights on membership, otherwise the distance and a
    separating normal.
    """
    if inner.m < 1:
        raise RegionError("inner approximation is empty")
    res = hull_distance(inner.points, z, settings)
    res.member = res.distance <= tol
    if res.member:
        res.separator = None
    else:
        res.weights = None
    return res


def inner_add_point(inner: InnerApprox, z: np.ndarray, tag: str = "", iteration: int = 0,
                    check_redundant: bool = False,
                    settings: SolverSettings = DEFAULT_SETTINGS) -> InnerApprox:
    """Append ``z`` unless it duplicates a stored point within ``DEDUP_TOL``.

    With ``check_redundant`` the point is flagged when it already lies in the
    current hull (it is stored either way).
    """
    z = np.asarray(z, dtype=float)
    if inner.m and np.min(np.max(np.abs(inner.points - z), axis=1)) <= DEDUP_TOL:
        return inner
    redundant = bool(check_redundant and inner.m and inner_contains(inner, z, VERIFY_TOL, settings).member)
    return InnerApprox(np.vstack([inner.points, z[None, :]]), inner.tags + (tag,),
                       inner.redundant + (redundant,), inner.iters + (iteration,))


def prune_inner(inner: InnerApprox, tol: float = VERIFY_TOL,
                settings: SolverSettings = DEFAULT_SETTINGS) -> InnerApprox:
    """Drop points lying in the hull of the remaining points (leave-one-out)."""
    keep = list(range(inner.m))
    for i in range(inner.m - 1, -1, -1):
        rest = [j for j in keep if j != i]
        if rest and hull_distance(inner.points[rest], inner.points[i], settings).distance <= tol:
            keep = rest
    return InnerApprox(inner.points[keep], tuple(inner.tags[j] for j in keep),
                       tuple(False for _ in keep), tuple(inner.iters[j] for j in keep))


# ---------------------------------------------------------------------------
# outer approximation


def outer_contains(outer: OuterApprox, z: np.ndarray, tol: float = 1e-9) -> bool:
    z = np.asarray(z, dtype=float)
    if np.any(z < outer.lower - tol) or np.any(z > outer.upper + tol):
        return False
    return all(h.violation(z) <= tol for h in outer.halfspaces)


def _cut_tol(offset: float) -> float:
    return VERIFY_TOL * max(1.0, abs(offset))


def outer_add_halfspace(outer: OuterApprox, h: Halfspace, inner: InnerApprox | None = None) -> OuterApprox:
    """Add a normalised halfspace, dropping it when the box or a parallel cut dominates.

    Raises :class:`InvalidCutError` if the cut excludes a stored inner point.
    """
    h = h.normalized()
    if inner is not None and inner.m:
        worst = float(np.max(inner.points @ h.normal - h.offset))
        if worst > _cut_tol(h.offset):
            raise InvalidCutError(f"{h.provenance} cut excludes a verified near-optimal point by {worst:.3g}")
    if outer.box_max(h.normal) <= h.offset + 1e-12:
        return outer
    kept = []
    for old in outer.halfspaces:
        if np.max(np.abs(old.normal - h.normal)) <= 1e-9:
            if old.offset <= h.offset:
                return outer
            continue
        kept.append(old)
    return replace(outer, halfspaces=tuple(kept) + (h,))


def inscribed_ball(outer: OuterApprox, settings: SolverSettings = DEFAULT_SETTINGS) -> tuple[np.ndarray, float]:
    """Centre and radius of the largest inf-norm ball inside the outer region.

    Row ``i`` becomes ``g_i'z + r ||g_i||_1 <= h_i`` (the support of an
    inf-norm ball is the L1 norm of the normal).
    """
    G, h = outer.inequalities()
    n = outer.n_z
    A = np.hstack([G, np.abs(G).sum(axis=1, keepdims=True)])
    c = np.zeros(n + 1)
    c[-1] = 1.0
    lp = LpProblem(c, sp.csr_matrix(A), h, lower=np.append(np.full(n, -np.inf), 0.0),
                   upper=np.full(n + 1, np.inf), maximize=True)
    sol = solve_lp(lp, settings=settings)
    if not sol.ok:
        raise RegionError("outer approximation is empty")
    return sol.primal[:n], float(sol.primal[-1])


def outer_vertices(outer: OuterApprox, settings: SolverSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Vertex list of the outer region.

    Two and three dimensions use the compiled pair/triple intersection
    kernel; higher dimensions use Qhull's halfspace intersection from an
    interior point, which needs a full-dimensional region.
    """
    G, h = outer.inequalities()
    if outer.n_z in (2, 3):
        return kernels.enumerate_vertices(G, h, 1e-9)
    if outer.n_z == 1:
        return np.array([[outer.lower[0]], [outer.upper[0]]]) if outer.k == 0 else _interval_vertices(G, h)
    from scipy.spatial import HalfspaceIntersection
    from scipy.spatial import QhullError

    centre, radius = inscribed_ball(outer, settings)
    if radius <= 1e-9 * max(1.0, float(np.max(outer.upper - outer.lower))):
        raise DegenerateHullError("outer region has no interior; vertex enumeration needs full dimension")
    halfspaces = np.hstack([G, -h[:, None]])
    V, last = None, None
    # nearly parallel cuts can trip Qhull's merge checks: allow wide merges,
    # then fall back to joggled input (vertices move by ~1e-11 relative)
    for options in ("Qx", "Qx Q12", "QJ"):
        try:
            V = HalfspaceIntersection(halfspaces, centre, qhull_options=options).intersections
            break
        except QhullError as exc:
            last = exc
    if V is None:
        raise DegenerateHullError(f"halfspace intersection failed: {last}") from last
    return kernels.dedupe_points(V[np.lexsort(np.round(V, 9).T[::-1])], 1e-9)


def _interval_vertices(G: np.ndarray, h: np.ndarray) -> np.ndarray:
    g = G[:, 0]
    hi = np.min(h[g > 0] / g[g > 0])
    lo = np.max(h[g < 0] / g[g < 0])
    if lo > hi:
        raise RegionError("outer approximation is empty")
    return np.array([[lo], [hi]])


# ---------------------------------------------------------------------------
# step 1


def verify_near_optimal(problem: ExplorationProblem, z: np.ndarray, tol: float = VERIFY_TOL,
                        settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """Distance of ``z`` to the near-optimal set; raises when above ``tol``."""
    d = near_optimal_distance(problem, z, settings)
    scale = max(1.0, float(np.max(np.abs(z))))
    if d > tol * scale:
        raise MembershipError(f"point {np.round(z, 6).tolist()} is {d:.3g} away from the near-optimal set")
    return d


def model_row_cuts(problem: ExplorationProblem) -> list[Halfspace]:
    """Inequality rows expressible in z alone (``a' = y' S`` exactly)."""
    A = problem.arrays.A_ub
    if A.shape[0] == 0:
        return []
    S = problem.S.toarray()
    support = np.flatnonzero(np.any(S != 0, axis=0))
    out = []
    A = A.tocsr()
    for r in range(A.shape[0]):
        row = A.getrow(r)
        if not np.all(np.isin(row.indices, support)):
            continue
        a = row.toarray().ravel()
        y, *_ = np.linalg.lstsq(S.T, a, rcond=None)
        if np.max(np.abs(S.T @ y - a)) <= 1e-9 * max(1.0, np.max(np.abs(a))) and np.any(y != 0):
            out.append(Halfspace(y, float(problem.arrays.b_ub[r]), "model-row"))
    return out


def init_regions(problem: ExplorationProblem, known_points: Sequence[np.ndarray],
                 tags: Sequence[str] | None = None, cost_cut: bool | None = None,
                 import_rows: bool | None = None,
                 settings: SolverSettings = DEFAULT_SETTINGS) -> tuple[InnerApprox, OuterApprox]:
    """Initial regions from known near-optimal points and problem structure.

    The outer approximation holds the z-box, the cost under-approximation
    ``(S c)'z <= budget`` when valid, and model rows written purely in z.
    """
    if len(known_points) == 0:
        raise RegionError("at least one known near-optimal point is required")
    tags = list(tags) if tags is not None else ["optimum"] + ["known"] * (len(known_points) - 1)
    inner = InnerApprox(np.zeros((0, problem.n_z)))
    for z, tag in zip(known_points, tags):
        z = np.asarray(z, dtype=float)
        verify_near_optimal(problem, z, settings=settings)
        inner = inner_add_point(inner, z, tag, 0)
    outer = OuterApprox(np.asarray(problem.z_lower, dtype=float), np.asarray(problem.z_upper, dtype=float))
    use_cost = problem.cost_cut if cost_cut is None else cost_cut
    if use_cost:
        sc = problem.cost_coefficients()
        if np.any(sc != 0):
            outer = outer_add_halfspace(outer, Halfspace(sc, problem.budget, "cost-cut"), inner)
    if problem.spec.import_rows if import_rows is None else import_rows:
        for h in model_row_cuts(problem):
            outer = outer_add_halfspace(outer, h, inner)
    return inner, outer


# ---------------------------------------------------------------------------
# CSV exchange


def write_points_csv(path, inner: InnerApprox, names: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + ["origin", "iter"])
        for p, tag, it in zip(inner.points, inner.tags, inner.iters):
            w.writerow([repr(float(v)) for v in p] + [tag, it])


def read_points_csv(path) -> tuple[InnerApprox, list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise RegionError(f"{path}: empty points file")
    header = rows[0]
    meta = [c for c in ("origin", "iter") if c in header]
    names = [c for c in header if c not in meta]
    zi = [header.index(c) for c in names]
    pts = np.array([[float(r[i]) for i in zi] for r in rows[1:]], dtype=float).reshape(-1, len(names))
    tags = tuple(r[header.index("origin")] if "origin" in header else "known" for r in rows[1:])
    iters = tuple(int(r[header.index("iter")]) if "iter" in header else 0 for r in rows[1:])
    return InnerApprox(pts, tags, tuple(False for _ in tags), iters), names


def write_halfspaces_csv(path, outer: OuterApprox, names: Sequence[str]) -> None:
    """Box rows are written with provenance ``bound`` ahead of the cuts."""
    n = outer.n_z
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + ["offset", "provenance", "iter"])
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            w.writerow([repr(float(v)) for v in e] + [repr(float(outer.upper[k])), "bound", 0])
            w.writerow([repr(float(v)) for v in -e] + [repr(float(-outer.lower[k])), "bound", 0])
        for h in outer.halfspaces:
            w.writerow([repr(float(v)) for v in h.normal] + [repr(float(h.offset)), h.provenance, h.iteration])


def read_halfspaces_csv(path) -> tuple[OuterApprox, list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise RegionError(f"{path}: empty halfspaces file")
    header = rows[0]
    names = header[: header.index("offset")]
    n = len(names)
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    cuts = []
    for r in rows[1:]:
        normal = np.array([float(v) for v in r[:n]])
        offset = float(r[n])
        prov = r[n + 1] if len(r) > n + 1 else "dual-cut"
        it = int(r[n + 2]) if len(r) > n + 2 else 0
        nz = np.flatnonzero(normal)
        if prov == "bound" and len(nz) == 1:
            k = nz[0]
            if normal[k] > 0:
                upper[k] = min(upper[k], offset / normal[k])
            else:
                lower[k] = max(lower[k], offset / normal[k])
        else:
            cuts.append(Halfspace(normal, offset, prov, it).normalized())
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise RegionError(f"{path}: box bounds missing for some coordinates")
    return OuterApprox(lower, upper, tuple(cuts)), names


def outer_at_iteration(outer: OuterApprox, iteration: int) -> OuterApprox:
    return replace(outer, halfspaces=tuple(h for h in outer.halfspaces if h.iteration <= iteration))


def inner_at_iteration(inner: InnerApprox, iteration: int) -> InnerApprox:
    keep = [i for i, it in enumerate(inner.iters) if it <= iteration]
    return InnerApprox(inner.points[keep], tuple(inner.tags[i] for i in keep),
                       tuple(inner.redundant[i] for i in keep), tuple(inner.iters[i] for i in keep))
