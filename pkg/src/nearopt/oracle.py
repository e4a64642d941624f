"""The ORACLE loop: furthest trial point, closest near-optimal point, cuts.

The furthest point of the outer approximation from the inner hull is found
by replacing the inner distance LP with its KKT conditions; complementarity
is written with big-M constraints on ``2 n_z + m`` binaries.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleError, ModelError, RegionError, UnboundedError
from .formulations import closest_point, value_function
from .model import ExplorationProblem, ExplorationSpec, LinearProgram, build_exploration
from .regions import (Halfspace, HullDistance, InnerApprox, OuterApprox, hull_distance, init_regions, inner_add_point,
                      outer_add_halfspace, outer_vertices)
from .solver import (DEFAULT_SETTINGS, LpProblem, LpSession, LpStatus, MilpStatus, SolverSettings, solve_lp,
                     solve_milp)
from .trace import CutRecord, IterationRecord

log = logging.getLogger(__name__)

#: dual cut only when the trial is further than this from the near-optimal set
STRICT_CUT_TOL = 1e-7


def optimal_value(model: LinearProgram, settings: SolverSettings = DEFAULT_SETTINGS):
    """Cost-optimal value and a witness; raises on infeasible/unbounded models."""
    sol = solve_lp(model, settings=settings)
    if sol.status is LpStatus.INFEASIBLE:
        raise InfeasibleError(f"model {model.name!r} is infeasible")
    if sol.status is LpStatus.UNBOUNDED:
        raise UnboundedError(f"model {model.name!r} is unbounded")
    if not sol.ok:
        raise InfeasibleError(f"model {model.name!r} could not be solved ({sol.status.value})")
    return sol.objective, sol.primal


def setup_exploration(model: LinearProgram, spec: ExplorationSpec,
                      settings: SolverSettings = DEFAULT_SETTINGS) -> ExplorationProblem:
    v_star, x_star = optimal_value(model, settings)
    return build_exploration(model, spec, v_star, x_star)


# ---------------------------------------------------------------------------
# step 2: max-min distance MILP


@dataclass
class MaxMinMilp:
    problem: LpProblem
    n_z: int
    m: int
    shift: np.ndarray
    big_m_nu: float
    big_m_eta: float
    Z: np.ndarray

    # column offsets
    @property
    def i_t(self):
        return self.n_z

    @property
    def s_lam(self):
        return slice(self.n_z + 1, self.n_z + 1 + self.m)

    @property
    def s_a(self):
        o = self.n_z + 1 + self.m
        return slice(o, o + self.n_z)

    @property
    def s_b(self):
        o = 2 * self.n_z + 1 + self.m
        return slice(o, o + self.n_z)

    @property
    def s_nu(self):
        o = 3 * self.n_z + 1 + self.m
        return slice(o, o + self.m)

    @property
    def i_eta(self):
        return 3 * self.n_z + 1 + 2 * self.m

    @property
    def s_norm_bin(self):
        o = 3 * self.n_z + 2 + 2 * self.m
        return slice(o, o + 2 * self.n_z)

    @property
    def s_lam_bin(self):
        o = 5 * self.n_z + 2 + 2 * self.m
        return slice(o, o + self.m)

    @property
    def n_binaries(self) -> int:
        return int(np.sum(self.problem.integrality))

    def z_of(self, x: np.ndarray) -> np.ndarray:
        return x[: self.n_z] + self.shift


def build_maxmin_milp(outer: OuterApprox, inner: InnerApprox, big_m_scale: float = 1.0,
                      t_upper: float | None = None) -> MaxMinMilp:
    """Single-level MILP for ``max_{z_O in O} min_{z_I in I} ||z_O - z_I||_inf``.

    Coordinates are shifted to the box centre.  The big-M constants are
    derived bounds: the norm duals lie in [0, 1] (they sum to one), the
    point-weight duals are bounded by the largest coordinate spread of the
    stored points, and every slack by the box width plus the coordinate width.
    ``big_m_scale`` multiplies the dual constants on re-solve.

    ``t_upper`` is an optional known upper bound on the distance (for
    instance the previous iteration's dual bound: the outer region only
    shrinks and the inner only grows).  It tightens both ``t`` and the
    norm-row constants, which dominates solve time.
    """
    if inner.m < 1:
        raise RegionError("inner approximation is empty")
    n, m = outer.n_z, inner.m
    lo, hi = np.asarray(outer.lower, float), np.asarray(outer.upper, float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise RegionError("outer approximation is not compact")
    if np.any(lo > hi):
        raise RegionError("outer approximation is empty")
    shift = 0.5 * (lo + hi)
    Z = inner.points - shift
    width = hi - lo
    D = float(np.max(width))
    if t_upper is not None and np.isfinite(t_upper):
        D = min(D, max(float(t_upper), 0.0) * (1.0 + 1e-6) + 1e-7)
    spread = float(np.max(np.ptp(Z, axis=0))) if m > 1 else 0.0
    # provable bounds are spread and max|Z| + spread; doubled so the
    # post-solve proximity check only fires on genuinely wrong constants
    big_nu = big_m_scale * (2.0 * spread + 1e-6)
    big_eta = big_m_scale * (2.0 * (float(np.max(np.abs(Z))) + spread) + 1e-6)
    # a norm row's slack is at most 2t (the opposite row bounds it below)
    big_p = 1.01 * np.minimum(D + width, 2.0 * D) + 1e-6

    N = 5 * n + 2 + 3 * m
    col_t = n
    c_lam = np.arange(n + 1, n + 1 + m)
    c_a = np.arange(n + 1 + m, 2 * n + 1 + m)
    c_b = np.arange(2 * n + 1 + m, 3 * n + 1 + m)
    c_nu = np.arange(3 * n + 1 + m, 3 * n + 1 + 2 * m)
    col_eta = 3 * n + 1 + 2 * m
    c_up = np.arange(3 * n + 2 + 2 * m, 4 * n + 2 + 2 * m)
    c_dn = np.arange(4 * n + 2 + 2 * m, 5 * n + 2 + 2 * m)
    c_v = np.arange(5 * n + 2 + 2 * m, 5 * n + 2 + 3 * m)

    lower = np.zeros(N)
    upper = np.ones(N)
    lower[:n], upper[:n] = lo - shift, hi - shift
    upper[col_t] = D
    upper[c_nu] = big_nu
    lower[col_eta], upper[col_eta] = -big_eta, big_eta
    integrality = np.zeros(N, dtype=np.int8)
    integrality[c_up] = integrality[c_dn] = integrality[c_v] = 1

    ub_rows, ub_rhs = [], []
    eq_rows, eq_rhs = [], []

    def row(entries):
        r = np.zeros(N)
        for cols, vals in entries:
            r[cols] += vals
        return r

    # z_O in O (box handled by bounds)
    G, h = outer.inequalities(include_box=False)
    for g, off in zip(G, h):
        ub_rows.append(row([(np.arange(n), g)]))
        ub_rhs.append(off - g @ shift)
    for j in range(n):
        # z_O - Z'lam - t <= 0 and -z_O + Z'lam - t <= 0
        ub_rows.append(row([(j, 1.0), (c_lam, -Z[:, j]), (col_t, -1.0)]))
        ub_rhs.append(0.0)
        ub_rows.append(row([(j, -1.0), (c_lam, Z[:, j]), (col_t, -1.0)]))
        ub_rhs.append(0.0)
        # complementarity of the norm rows
        ub_rows.append(row([(c_a[j], 1.0), (c_up[j], -1.0)]))
        ub_rhs.append(0.0)
        ub_rows.append(row([(c_b[j], 1.0), (c_dn[j], -1.0)]))
        ub_rhs.append(0.0)
        ub_rows.append(row([(col_t, 1.0), (j, -1.0), (c_lam, Z[:, j]), (c_up[j], big_p[j])]))
        ub_rhs.append(big_p[j])
        ub_rows.append(row([(col_t, 1.0), (j, 1.0), (c_lam, -Z[:, j]), (c_dn[j], big_p[j])]))
        ub_rhs.append(big_p[j])
        # a coordinate cannot attain the distance from both sides unless it is zero
        ub_rows.append(row([(c_up[j], 1.0), (c_dn[j], 1.0)]))
        ub_rhs.append(1.0)
    eq_rows.append(row([(c_lam, 1.0)]))
    eq_rhs.append(1.0)
    # stationarity in t
    eq_rows.append(row([(c_a, 1.0), (c_b, 1.0)]))
    eq_rhs.append(1.0)
    for i in range(m):
        # stationarity in lam_i: nu_i = eta + Z_i'(b - a)
        eq_rows.append(row([(c_nu[i], 1.0), (col_eta, -1.0), (c_a, Z[i]), (c_b, -Z[i])]))
        eq_rhs.append(0.0)
        ub_rows.append(row([(c_nu[i], 1.0), (c_v[i], -big_nu)]))
        ub_rhs.append(0.0)
        ub_rows.append(row([(c_lam[i], 1.0), (c_v[i], 1.0)]))
        ub_rhs.append(1.0)
    # at least one and at most max(n_z, 2) active norm rows
    both = np.concatenate([c_up, c_dn])
    ub_rows.append(row([(both, -1.0)]))
    ub_rhs.append(-1.0)
    ub_rows.append(row([(both, 1.0)]))
    ub_rhs.append(float(max(n, 2)))
    # Caratheodory: between 1 and n_z + 1 points carry weight
    if m - (n + 1) > 0:
        ub_rows.append(row([(c_v, -1.0)]))
        ub_rhs.append(-(m - (n + 1.0)))
    ub_rows.append(row([(c_v, 1.0)]))
    ub_rhs.append(m - 1.0)

    c = np.zeros(N)
    c[col_t] = 1.0
    prob = LpProblem(c, sp.csr_matrix(np.array(ub_rows)), np.array(ub_rhs),
                     sp.csr_matrix(np.array(eq_rows)), np.array(eq_rhs), lower, upper, integrality,
                     maximize=True)
    return MaxMinMilp(prob, n, m, shift, big_nu, big_eta, Z)


class _OuterLp:
    """Repeated ``max w'z`` over the outer region on one solver instance."""

    def __init__(self, outer: OuterApprox, settings: SolverSettings):
        G, h = outer.inequalities(include_box=False)
        self.session = LpSession(LpProblem(np.zeros(outer.n_z), sp.csr_matrix(G.reshape(-1, outer.n_z)), h,
                                           lower=np.asarray(outer.lower, float),
                                           upper=np.asarray(outer.upper, float), maximize=True), settings)

    def argmax(self, w: np.ndarray) -> np.ndarray | None:
        sol = self.session.solve(c=w)
        return sol.primal if sol.ok else None


def ascent_search(outer: OuterApprox, inner: InnerApprox, rng: np.random.Generator, n_random: int,
                  settings: SolverSettings = DEFAULT_SETTINGS, max_steps: int = 25):
    """Local search for the outer point furthest from the inner hull.

    From the outer vertex maximising a start direction, alternate between the
    hull-distance LP (whose dual gives a separating normal ``s``) and the
    outer vertex maximising ``s``.  The distance never decreases along the
    way since ``s'z - max_i s'z_i`` bounds it from below.  Starts are the
    signed unit directions plus ``n_random`` random ones.  Returns
    ``(distance, point, membership)`` of the best point found.
    """
    n = outer.n_z
    olp = _OuterLp(outer, settings)
    starts = list(np.eye(n)) + list(-np.eye(n)) + list(rng.uniform(-1.0, 1.0, size=(n_random, n)))
    best = None
    seen = []
    dist = HullDistance(inner.points, settings)
    for w in starts:
        z = olp.argmax(w)
        if z is None:
            continue
        d_prev = -np.inf
        for _ in range(max_steps):
            if any(np.max(np.abs(z - q)) <= 1e-9 for q in seen):
                break
            seen.append(z)
            mem = dist(z)
            if best is None or mem.distance > best[0]:
                best = (mem.distance, z, mem)
            if mem.distance <= d_prev + 1e-12 or np.max(np.abs(mem.separator)) < 1e-12:
                break
            d_prev = mem.distance
            z = olp.argmax(mem.separator)
            if z is None:
                break
    if best is None:
        raise RegionError("outer approximation is empty")
    return best


def _kkt_warm_start(milp: "MaxMinMilp", z: np.ndarray, settings: SolverSettings) -> np.ndarray | None:
    """A feasible MILP point whose binaries encode the KKT pattern of ``z``'s distance LP.

    The continuous part is re-optimised with the binaries fixed, so the
    result is feasible to solver precision (or ``None`` if the pattern is
    rejected by the cardinality rows).
    """
    n, m = milp.n_z, milp.m
    Z = milp.Z
    zs = np.asarray(z, float) - milp.shift
    mem = hull_distance(Z, zs, settings)
    if mem.distance <= 1e-9:
        return None
    lam = np.clip(mem.weights, 0.0, None)
    w = mem.separator
    a, b = np.clip(w, 0.0, None), np.clip(-w, 0.0, None)
    u_up, u_dn = (a > 1e-9).astype(float), (b > 1e-9).astype(float)
    v = (lam <= 1e-9).astype(float)
    if not (1 <= u_up.sum() + u_dn.sum() <= max(n, 2)) or np.any(u_up + u_dn > 1):
        return None
    if not (m - n - 1 <= v.sum() <= m - 1):
        return None
    prob = milp.problem
    ints = np.flatnonzero(prob.integrality)
    pattern = np.concatenate([u_up, u_dn, v])
    lower, upper = prob.lower.copy(), prob.upper.copy()
    lower[ints] = upper[ints] = pattern
    fixed = LpProblem(prob.c, prob.A_ub, prob.b_ub, prob.A_eq, prob.b_eq, lower, upper, maximize=True)
    sol = solve_lp(fixed, settings=settings)
    if not sol.ok:
        return None
    x = sol.primal.copy()
    x[ints] = pattern
    return x


@dataclass
class TrialResult:
    z_trial: np.ndarray
    d_io: float
    milp_status: MilpStatus
    bound: float
    d_verified: float = float("nan")
    norm_active: int = 0
    pool: list[np.ndarray] = field(default_factory=list)
    certified: bool = True


def furthest_point(outer: OuterApprox, inner: InnerApprox, rel_gap: float = 0.1, abs_gap: float = 0.05,
                   time_limit: float = 600.0, pool_size: int = 1,
                   settings: SolverSettings = DEFAULT_SETTINGS, t_upper: float | None = None,
                   seed: int = 0, warm_start: bool = True, method: str = "milp") -> TrialResult:
    """Point of the outer approximation furthest (inf-norm) from the inner hull.

    ``d_io`` is the MILP incumbent value; ``bound`` its dual bound.  The trial
    point's distance is re-checked with the hull LP (``d_verified``).  With
    ``warm_start`` the MILP starts from the best point of a local ascent.
    ``method="vertex"`` delegates to :func:`furthest_vertex` instead.
    """
    if method == "vertex":
        return furthest_vertex(outer, inner, settings)
    if method != "milp":
        raise ValueError(f"unknown metric method {method!r}")
    x0 = None
    scale = 1.0
    for _ in range(4):
        milp = build_maxmin_milp(outer, inner, scale, t_upper)
        if warm_start and x0 is None:
            _, z0, _ = ascent_search(outer, inner, np.random.default_rng(seed), outer.n_z, settings)
            x0 = _kkt_warm_start(milp, z0, settings)
        sol = solve_milp(milp.problem, rel_gap, abs_gap, time_limit, pool_size, settings, warm_start=x0)
        if sol.status is MilpStatus.INFEASIBLE:
            raise RegionError("max-min MILP is infeasible: outer approximation is empty")
        x = sol.incumbent
        near_nu = np.any(x[milp.s_nu] >= 0.99 * milp.big_m_nu) and milp.big_m_nu > 1e-5
        near_eta = abs(x[milp.i_eta]) >= 0.99 * milp.big_m_eta and milp.big_m_eta > 1e-5
        if not (near_nu or near_eta):
            break
        log.warning("dual variable within 1%% of its big-M; re-solving with 10x larger constants")
        scale *= 10.0
        x0 = None
    z = milp.z_of(x)
    d_check = hull_distance(inner.points, z, settings).distance
    pool = [milp.z_of(p) for p in sol.pool]
    return TrialResult(z, max(0.0, float(sol.objective)), sol.status, float(sol.bound), d_check,
                       int(round(np.sum(x[milp.s_norm_bin]))), pool)


def furthest_vertex(outer: OuterApprox, inner: InnerApprox,
                    settings: SolverSettings = DEFAULT_SETTINGS) -> TrialResult:
    """Exact max-min distance by enumerating the outer vertices.

    The distance to a convex hull is convex, so its maximum over a polytope
    is attained at a vertex.  Vertices are visited in decreasing order of the
    nearest-stored-point distance (an upper bound on the hull distance) and
    the scan stops once that bound cannot beat the best exact value.
    """
    V = outer_vertices(outer, settings)
    if len(V) == 0:
        raise RegionError("outer approximation is empty")
    ub = np.empty(len(V))
    step = max(1, 2_000_000 // max(1, inner.m * inner.n_z))
    for s in range(0, len(V), step):
        blk = V[s:s + step]
        ub[s:s + step] = np.min(np.max(np.abs(blk[:, None, :] - inner.points[None, :, :]), axis=2), axis=1)
    order = np.argsort(-ub, kind="stable")
    best_d, best_z = -1.0, V[order[0]]
    dist = HullDistance(inner.points, settings)
    for i in order:
        if ub[i] <= best_d + 1e-12:
            break
        d = dist(V[i]).distance
        if d > best_d + 1e-12:
            best_d, best_z = d, V[i]
    best_d = max(best_d, 0.0)
    return TrialResult(np.array(best_z), best_d, MilpStatus.OPTIMAL, best_d, best_d)


# ---------------------------------------------------------------------------
# steps 3 and 4


@dataclass
class FeasibleResult:
    z_feasible: np.ndarray
    delta: float
    mu: np.ndarray
    x_full: np.ndarray


def closest_near_optimal(problem: ExplorationProblem, z_trial: np.ndarray,
                         settings: SolverSettings = DEFAULT_SETTINGS,
                         warm_start: np.ndarray | None = None) -> FeasibleResult:
    cp = closest_point(problem, z_trial, settings, warm_start)
    return FeasibleResult(cp.z, cp.delta, cp.mu, cp.x)


def separating_cut(result: FeasibleResult, z_trial: np.ndarray,
                   threshold: float = STRICT_CUT_TOL) -> Halfspace | None:
    """``mu'z <= mu'z_f``, strictly separating the trial point; ``None`` if degenerate."""
    if result.delta <= threshold:
        return None
    mu = np.asarray(result.mu, dtype=float)
    if np.max(np.abs(mu)) < 1e-9:
        return None
    h = Halfspace(mu, float(mu @ result.z_feasible), "dual-cut").normalized()
    if h.normal @ z_trial - h.offset <= 0:
        log.warning("dual cut does not strictly separate the trial point; skipped")
        return None
    return h


def value_function_cut(problem: ExplorationProblem, z_f: np.ndarray,
                       settings: SolverSettings = DEFAULT_SETTINGS,
                       warm_start: np.ndarray | None = None) -> tuple[Halfspace | None, float]:
    """Linearisation of the minimum-cost value function at ``z_f`` capped by the budget."""
    vf = value_function(problem, z_f, settings, warm_start)
    if vf is None:
        return None, float("nan")
    lam = vf.gradient
    if np.max(np.abs(lam), initial=0.0) < 1e-9:
        return None, vf.value
    offset = problem.budget - vf.value + float(lam @ z_f)
    return Halfspace(lam, offset, "value-cut"), vf.value


# ---------------------------------------------------------------------------
# main loop


@dataclass
class OracleOptions:
    rel_gap: float = 0.1
    abs_gap: float = 0.05
    time_limit: float = 600.0
    value_cut: bool = True
    pool_size: int = 1
    #: 1 = exact MILP every iteration; n > 1 = every n-th; 0 = only to certify convergence
    exact_metric_every: int = 1
    heuristic_directions: int = 0
    workers: int = 1
    seed: int = 0
    warm_start: bool = True
    #: step-2 metric: "milp" (KKT reformulation) or "vertex" (exact enumeration)
    metric: str = "milp"
    #: keep an (inner, outer) snapshot after every iteration
    keep_history: bool = False
    cost_cut: bool | None = None
    import_rows: bool | None = None
    settings: SolverSettings = DEFAULT_SETTINGS


@dataclass
class ExplorationResult:
    method: str
    inner: InnerApprox
    outer: OuterApprox
    trace: list[IterationRecord]
    cuts: list[CutRecord]
    converged: bool
    d_io: float
    problem: ExplorationProblem | None = None
    history: list[tuple[InnerApprox, OuterApprox]] = field(default_factory=list)

    def summary(self) -> dict:
        return {"method": self.method, "converged": self.converged, "d_IO": self.d_io,
                "iterations": len(self.trace), "inner_m": self.inner.m, "outer_k": self.outer.k}


def initial_regions(problem: ExplorationProblem, known_points=(), options: OracleOptions = OracleOptions()):
    if problem.x_star is None:
        raise ModelError("exploration problem carries no optimal solution")
    pts = [problem.project(problem.x_star)] + [np.asarray(p, float) for p in known_points]
    return init_regions(problem, pts, cost_cut=options.cost_cut, import_rows=options.import_rows,
                        settings=options.settings)


def _heuristic_trial(outer: OuterApprox, inner: InnerApprox, rng: np.random.Generator, n_dirs: int,
                     settings: SolverSettings) -> TrialResult:
    """Uncertified trial from :func:`ascent_search`."""
    d, z, _ = ascent_search(outer, inner, rng, n_dirs, settings)
    return TrialResult(z, d, MilpStatus.GAP_LIMIT, float("nan"), d, certified=False)


def _sorted_unique(points, tol=1e-9):
    out = []
    for p in sorted((np.asarray(p, float) for p in points), key=lambda v: tuple(np.round(v, 12))):
        if all(np.max(np.abs(p - q)) > tol for q in out):
            out.append(p)
    return out


def run_oracle(problem: ExplorationProblem, tol: float, max_iter: int = 300,
               options: OracleOptions | None = None, known_points=(), regions=None) -> ExplorationResult:
    """Refine inner and outer approximations until their max-min distance is below ``tol``.

    Each pass: furthest trial point (step 2), stop if ``d_IO <= tol``;
    closest near-optimal point (step 3); grow the inner hull and, when the
    trial is infeasible, add the dual cut and optionally the value-function
    cut (step 4).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    opt = options or OracleOptions()
    st = opt.settings
    rng = np.random.default_rng(opt.seed)
    inner, outer = regions if regions is not None else initial_regions(problem, known_points, opt)
    trace: list[IterationRecord] = []
    cuts: list[CutRecord] = []
    history = [(inner, outer)] if opt.keep_history else []
    converged = False
    d_last = float("nan")
    t_upper = None
    t0 = time.perf_counter()
    pool = ThreadPoolExecutor(opt.workers) if opt.workers > 1 else None
    try:
        for k in range(max_iter + 1):
            rec = IterationRecord(k, "oracle")
            ts = time.perf_counter()
            every = opt.exact_metric_every
            exact = every == 1 or k == max_iter or (every > 1 and k % every == 0)
            if not exact:
                trial = _heuristic_trial(outer, inner, rng, opt.heuristic_directions or outer.n_z, st)
                # the heuristic only bounds d_IO from below: certify with the MILP once it reaches tol
                exact = trial.d_io <= tol
                rec.method = "oracle-heuristic"
            if exact:
                trial = furthest_point(outer, inner, opt.rel_gap, opt.abs_gap, opt.time_limit, opt.pool_size, st,
                                       t_upper, seed=opt.seed + k, warm_start=opt.warm_start, method=opt.metric)
                rec.method = "oracle"
            rec.step_times_ms["step2"] = 1e3 * (time.perf_counter() - ts)
            rec.d_io, rec.bound, rec.certified, rec.z_trial = trial.d_io, trial.bound, trial.certified, trial.z_trial
            if exact:
                d_last = trial.d_io
                if np.isfinite(trial.bound):
                    t_upper = trial.bound if t_upper is None else min(t_upper, trial.bound)
            if (exact and trial.d_io <= tol) or k == max_iter:
                converged = exact and trial.d_io <= tol
                rec.inner_m, rec.outer_k = inner.m, outer.k
                rec.cum_ms = 1e3 * (time.perf_counter() - t0)
                trace.append(rec)
                break

            trials = [trial.z_trial]
            if opt.pool_size > 1 and exact:
                trials = _sorted_unique(trial.pool or [trial.z_trial])
            ts = time.perf_counter()
            if pool is not None and len(trials) > 1:
                feas = list(pool.map(lambda z: closest_near_optimal(problem, z, st), trials))
            else:
                feas = [closest_near_optimal(problem, z, st) for z in trials]
            rec.step_times_ms["step3"] = 1e3 * (time.perf_counter() - ts)

            ts = time.perf_counter()
            for z_t, fr in zip(trials, feas):
                inner = inner_add_point(inner, fr.z_feasible, f"oracle:{k}", k + 1)
            n_cuts = 0
            all_feasible = True
            for z_t, fr in zip(trials, feas):
                if fr.delta <= STRICT_CUT_TOL:
                    continue
                all_feasible = False
                new_cuts = []
                cut = separating_cut(fr, z_t)
                if cut is not None:
                    new_cuts.append(cut)
                if opt.value_cut:
                    vcut, _ = value_function_cut(problem, fr.z_feasible, st, fr.x_full)
                    if vcut is not None:
                        new_cuts.append(vcut)
                for c in new_cuts:
                    c = Halfspace(c.normal, c.offset, c.provenance, k + 1).normalized()
                    before = outer
                    outer = outer_add_halfspace(outer, c, inner)
                    if outer is not before:
                        n_cuts += 1
                        cuts.append(CutRecord(k + 1, c.normal, c.offset, c.provenance, z_t, fr.z_feasible))
            rec.step_times_ms["step4"] = 1e3 * (time.perf_counter() - ts)
            rec.trial_feasible = all_feasible
            rec.z_feasible = feas[0].z_feasible
            rec.cuts_added = n_cuts
            rec.inner_m, rec.outer_k = inner.m, outer.k
            rec.cum_ms = 1e3 * (time.perf_counter() - t0)
            trace.append(rec)
            if opt.keep_history:
                history.append((inner, outer))
            log.debug("iter %d d_IO=%.6g feasible=%s cuts=%d m=%d k=%d %.0f ms", k, rec.d_io, all_feasible,
                      n_cuts, inner.m, outer.k, rec.step_times_ms["step2"])
    finally:
        if pool is not None:
            pool.shutdown()
    return ExplorationResult("oracle", inner, outer, trace, cuts, converged, d_last, problem, history)
