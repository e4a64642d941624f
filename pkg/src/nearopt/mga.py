"""Baseline MGA weight schemes and their run driver.

Every scheme solves ``min w'z`` over the budgeted model; the optimum gives a
new inner point and the supporting halfspace ``w'z >= w'z_k``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import RegionError
from .formulations import mga_lp
from .model import ExplorationProblem
from .oracle import ExplorationResult, OracleOptions, furthest_point, initial_regions
from .regions import Halfspace, inner_add_point, outer_add_halfspace
from .solver import DEFAULT_SETTINGS, SolverSettings, require_optimal, solve_lp
from .trace import IterationRecord

log = logging.getLogger(__name__)

METHODS = ("hsj", "hsj-rel", "random", "vmm", "erg", "spores")

#: HSJ counts a component as used when it exceeds this fraction of z_max
HSJ_REL_THRESHOLD = 1e-6


@dataclass
class MgaState:
    method: str
    z_max: np.ndarray
    z_lower: np.ndarray
    rng: np.random.Generator
    history: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    weights: np.ndarray | None = None
    rel_weights: np.ndarray | None = None
    vmm_queue: list[tuple[int, float]] = field(default_factory=list)
    spores_params: tuple[float, float] = (0.1, 10.0)
    spores_index: int = 0
    bound_tol: float = 1e-6

    @property
    def n_z(self) -> int:
        return len(self.z_max)

    @property
    def last_z(self) -> np.ndarray:
        if not self.history:
            raise ValueError("MGA weights need at least one prior solution")
        return self.history[-1][1]


def new_state(method: str, z_lower, z_upper, seed: int = 0, z0=None,
              spores_params: tuple[float, float] = (0.1, 10.0)) -> MgaState:
    """Fresh state; ``z0`` (usually the cost optimum) seeds the history."""
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown MGA method {method!r}; expected one of {', '.join(METHODS)}")
    z_upper = np.asarray(z_upper, dtype=float)
    z_lower = np.asarray(z_lower, dtype=float)
    n = len(z_upper)
    st = MgaState(method, z_upper, z_lower, np.random.default_rng(seed), spores_params=spores_params)
    st.weights = np.zeros(n)
    st.rel_weights = np.zeros(n)
    st.vmm_queue = [(i, s) for i in range(n) for s in (1.0, -1.0)]
    st.bound_tol = 1e-6 * max(1.0, float(np.max(z_upper - z_lower)))
    if z0 is not None:
        st.history.append((np.zeros(n), np.asarray(z0, dtype=float)))
    return st


def mga_step(problem: ExplorationProblem, w: np.ndarray,
             settings: SolverSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Projected optimum of ``min w'z`` over the budgeted model."""
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("MGA weights must be finite")
    sol = require_optimal(solve_lp(mga_lp(problem, w), settings=settings), "MGA LP")
    return problem.project(sol.primal)


def next_weight_hsj(state: MgaState) -> np.ndarray:
    z = state.last_z
    state.weights = state.weights + (np.abs(z) > HSJ_REL_THRESHOLD * state.z_max).astype(float)
    return state.weights.copy()


def _rel_increment(state: MgaState) -> np.ndarray:
    z = state.last_z
    safe = np.where(state.z_max > 0, state.z_max, 1.0)
    return np.where(state.z_max > 0, z / safe, 0.0)


def next_weight_hsjrel(state: MgaState) -> np.ndarray:
    state.rel_weights = state.rel_weights + _rel_increment(state)
    return state.rel_weights.copy()


def next_weight_random(state: MgaState) -> np.ndarray:
    return state.rng.uniform(-1.0, 1.0, size=state.n_z)


def _bound_attained(state: MgaState, i: int, sign: float) -> bool:
    target = state.z_lower[i] if sign > 0 else state.z_max[i]
    return any(abs(z[i] - target) <= state.bound_tol for _, z in state.history)


def next_weight_vmm(state: MgaState) -> np.ndarray:
    """``+e_i`` minimises ``z_i``, ``-e_i`` maximises it; random once the queue is empty."""
    while state.vmm_queue:
        i, sign = state.vmm_queue.pop(0)
        if _bound_attained(state, i, sign):
            continue
        w = np.zeros(state.n_z)
        w[i] = sign
        return w
    return next_weight_random(state)


def next_weight_erg(state: MgaState) -> np.ndarray:
    n = state.n_z
    k = int(state.rng.integers(1, n + 1))
    idx = state.rng.choice(n, size=k, replace=False)
    w = np.zeros(n)
    w[idx] = state.rng.choice(np.array([-1.0, 1.0]), size=k)
    return w


def next_weight_spores(state: MgaState) -> np.ndarray:
    alpha, beta = state.spores_params
    state.rel_weights = state.rel_weights + _rel_increment(state)
    j = state.spores_index % state.n_z
    state.spores_index += 1
    w = alpha * state.rel_weights
    w[j] += beta
    return w


_NEXT = {"hsj": next_weight_hsj, "hsj-rel": next_weight_hsjrel, "random": next_weight_random,
         "vmm": next_weight_vmm, "erg": next_weight_erg, "spores": next_weight_spores}


def next_weight(state: MgaState) -> np.ndarray:
    return _NEXT[state.method](state)


def run_mga(problem: ExplorationProblem, method: str, iterations: int, seed: int = 0,
            metric_every: int = 0, final_metric: bool = False, options: OracleOptions | None = None,
            spores_params: tuple[float, float] = (0.1, 10.0), known_points=()) -> ExplorationResult:
    """Step-1 initialisation followed by ``iterations`` weighted solves.

    With ``metric_every = n > 0`` the max-min distance is evaluated after
    every n-th iteration and after the last one; ``final_metric`` evaluates
    only the final regions.  MGA runs carry no certificate, so
    ``converged`` is always false.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    opt = options or OracleOptions()
    st = opt.settings
    inner, outer = initial_regions(problem, known_points, opt)
    state = new_state(method, problem.z_lower, problem.z_upper, seed, inner.points[0], spores_params)
    for z in inner.points[1:]:
        state.history.append((np.zeros(problem.n_z), z))
    trace: list[IterationRecord] = []
    history = [(inner, outer)] if opt.keep_history else []
    t0 = time.perf_counter()
    d_last = float("nan")
    for k in range(1, iterations + 1):
        rec = IterationRecord(k, state.method)
        ts = time.perf_counter()
        w = next_weight(state)
        z = mga_step(problem, w, st)
        rec.step_times_ms["step3"] = 1e3 * (time.perf_counter() - ts)
        state.history.append((w, z))
        rec.weight, rec.z_feasible = w, z
        ts = time.perf_counter()
        inner = inner_add_point(inner, z, state.method, k)
        if np.max(np.abs(w)) <= 0:
            rec.degenerate = True
            log.warning("%s iteration %d: zero weight vector, no supporting halfspace", state.method, k)
        else:
            before = outer
            try:
                outer = outer_add_halfspace(outer, Halfspace(-w, -float(w @ z), "mga", k), inner)
            except RegionError as exc:
                log.warning("%s iteration %d: halfspace rejected (%s)", state.method, k, exc)
            rec.cuts_added = int(outer is not before)
        rec.step_times_ms["step4"] = 1e3 * (time.perf_counter() - ts)
        if metric_every > 0 and (k % metric_every == 0 or k == iterations):
            ts = time.perf_counter()
            trial = furthest_point(outer, inner, opt.rel_gap, opt.abs_gap, opt.time_limit, 1, st,
                                   seed=opt.seed + k, warm_start=opt.warm_start, method=opt.metric)
            rec.step_times_ms["step2"] = 1e3 * (time.perf_counter() - ts)
            rec.d_io, rec.bound, rec.z_trial = trial.d_io, trial.bound, trial.z_trial
            d_last = trial.d_io
        rec.inner_m, rec.outer_k = inner.m, outer.k
        rec.cum_ms = 1e3 * (time.perf_counter() - t0)
        trace.append(rec)
        if opt.keep_history:
            history.append((inner, outer))
    if final_metric and metric_every <= 0:
        trial = furthest_point(outer, inner, opt.rel_gap, opt.abs_gap, opt.time_limit, 1, st,
                               seed=opt.seed, warm_start=opt.warm_start, method=opt.metric)
        d_last = trial.d_io
        trace[-1].d_io, trace[-1].bound, trace[-1].z_trial = trial.d_io, trial.bound, trial.z_trial
    return ExplorationResult(state.method, inner, outer, trace, [], False, d_last, problem, history)
