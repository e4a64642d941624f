"""Uniform LP/MILP interface over HiGHS.

Two backends are available: ``highs`` (the ``highspy`` bindings, default)
and ``scipy`` (``scipy.optimize.linprog``/``milp``, which also wrap HiGHS but
lack an absolute MIP gap).  ``NEAROPT_SOLVER`` selects the backend.

Dual sign convention: for ``L = c'x + y_ub'(A_ub x - b_ub) + y_eq'(A_eq x - b_eq)``
the inequality duals ``y_ub`` are nonnegative; ``y_eq`` is unrestricted.  The
objective sensitivity to a right-hand side is therefore ``-y``.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .errors import (InfeasibleError, NumericalError, SolverError, SolverUnavailableError,
                     TimeLimitError, UnboundedError)
from .model import LinearProgram

log = logging.getLogger(__name__)

LP_TOL = 1e-6
ENV_VAR = "NEAROPT_SOLVER"

try:
    import highspy
except ImportError:  # pragma: no cover - exercised only without highspy
    highspy = None


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical-failure"


class MilpStatus(str, Enum):
    OPTIMAL = "optimal"
    GAP_LIMIT = "gap-limit"
    TIME_LIMIT = "time-limit"
    INFEASIBLE = "infeasible"


@dataclass
class LpProblem:
    """Matrix-form problem ``min/max c'x`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq``."""

    c: np.ndarray
    A_ub: sp.csr_matrix | None = None
    b_ub: np.ndarray | None = None
    A_eq: sp.csr_matrix | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    integrality: np.ndarray | None = None
    maximize: bool = False

    def __post_init__(self):
        n = len(self.c)
        self.c = np.asarray(self.c, dtype=float)
        self.A_ub = sp.csr_matrix((0, n)) if self.A_ub is None else sp.csr_matrix(self.A_ub, dtype=float)
        self.A_eq = sp.csr_matrix((0, n)) if self.A_eq is None else sp.csr_matrix(self.A_eq, dtype=float)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.integrality is not None:
            self.integrality = np.asarray(self.integrality, dtype=np.int8)
        if self.A_ub.shape != (len(self.b_ub), n) or self.A_eq.shape != (len(self.b_eq), n):
            raise ValueError("constraint matrix shapes do not match")

    @property
    def n(self) -> int:
        return len(self.c)

    @classmethod
    def from_model(cls, model: LinearProgram) -> "LpProblem":
        a = model.arrays()
        return cls(a.c, a.A_ub, a.b_ub, a.A_eq, a.b_eq, a.lower, a.upper)

    def residual(self, x: np.ndarray) -> float:
        """Largest constraint violation of ``x``."""
        viol = [0.0]
        if self.A_ub.shape[0]:
            viol.append(float(np.max(self.A_ub @ x - self.b_ub)))
        if self.A_eq.shape[0]:
            viol.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        viol.append(float(np.max(self.lower - x, initial=0.0)))
        viol.append(float(np.max(x - self.upper, initial=0.0)))
        return max(viol)


@dataclass
class LpSolution:
    status: LpStatus
    objective: float = float("nan")
    primal: np.ndarray | None = None
    duals_ineq: np.ndarray | None = None
    duals_eq: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class MilpSolution:
    status: MilpStatus
    objective: float = float("nan")
    bound: float = float("nan")
    incumbent: np.ndarray | None = None
    pool: list[np.ndarray] = field(default_factory=list)
    gap_criterion: str | None = None


@dataclass(frozen=True)
class SolverSettings:
    backend: str | None = None
    threads: int = 1
    seed: int = 0
    lp_tol: float = LP_TOL

    def resolved_backend(self) -> str:
        name = (self.backend or os.environ.get(ENV_VAR) or ("highs" if highspy is not None else "scipy")).lower()
        if name not in ("highs", "scipy"):
            raise SolverUnavailableError(f"unknown solver backend {name!r}")
        if name == "highs" and highspy is None:
            raise SolverUnavailableError("highspy is not installed")
        return name

    def describe(self) -> dict:
        return {"backend": self.resolved_backend(), "threads": self.threads, "seed": self.seed,
                "lp_tol": self.lp_tol}


DEFAULT_SETTINGS = SolverSettings()


# ---------------------------------------------------------------------------
# highspy backend


def _highs_instance(settings: SolverSettings) -> "highspy.Highs":
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", settings.threads)
    h.setOptionValue("random_seed", settings.seed)
    h.setOptionValue("primal_feasibility_tolerance", min(1e-7, settings.lp_tol))
    h.setOptionValue("dual_feasibility_tolerance", min(1e-7, settings.lp_tol))
    return h


def _highs_model(prob: LpProblem) -> "highspy.HighsLp":
    A = sp.vstack([prob.A_ub, prob.A_eq], format="csr")
    A.sort_indices()
    lp = highspy.HighsLp()
    lp.num_col_ = prob.n
    lp.num_row_ = A.shape[0]
    lp.col_cost_ = prob.c
    lp.col_lower_ = prob.lower
    lp.col_upper_ = prob.upper
    lp.row_lower_ = np.concatenate([np.full(prob.A_ub.shape[0], -highspy.kHighsInf), prob.b_eq])
    lp.row_upper_ = np.concatenate([prob.b_ub, prob.b_eq])
    lp.a_matrix_.format_ = highspy.MatrixFormat.kRowwise
    lp.a_matrix_.start_ = A.indptr.astype(np.int32)
    lp.a_matrix_.index_ = A.indices.astype(np.int32)
    lp.a_matrix_.value_ = A.data
    lp.a_matrix_.num_col_ = prob.n
    lp.a_matrix_.num_row_ = A.shape[0]
    lp.sense_ = highspy.ObjSense.kMaximize if prob.maximize else highspy.ObjSense.kMinimize
    if prob.integrality is not None:
        lp.integrality_ = [highspy.HighsVarType.kInteger if k else highspy.HighsVarType.kContinuous
                           for k in prob.integrality]
    return lp


def _highs_lp(prob: LpProblem, settings: SolverSettings, warm_start) -> LpSolution:
    h = _highs_instance(settings)
    h.passModel(_highs_model(prob))
    if warm_start is not None:
        sol = highspy.HighsSolution()
        sol.col_value = list(np.asarray(warm_start, dtype=float))
        sol.value_valid = True
        h.setSolution(sol)
    h.run()
    return _highs_result(h, prob)


def _highs_result(h: "highspy.Highs", prob: LpProblem) -> LpSolution:
    status = h.getModelStatus()
    MS = highspy.HighsModelStatus
    if status == MS.kUnboundedOrInfeasible:
        h.setOptionValue("presolve", "off")
        h.run()
        status = h.getModelStatus()
        h.setOptionValue("presolve", "choose")
    if status == MS.kInfeasible:
        return LpSolution(LpStatus.INFEASIBLE)
    if status == MS.kUnbounded:
        return LpSolution(LpStatus.UNBOUNDED)
    if status != MS.kOptimal:
        return LpSolution(LpStatus.NUMERICAL_FAILURE)
    sol = h.getSolution()
    row_dual = np.asarray(sol.row_dual, dtype=float)
    sign = 1.0 if prob.maximize else -1.0
    n_ub = prob.A_ub.shape[0]
    return LpSolution(LpStatus.OPTIMAL, h.getInfo().objective_function_value,
                      np.asarray(sol.col_value, dtype=float),
                      sign * row_dual[:n_ub], sign * row_dual[n_ub:])


def _highs_milp(prob: LpProblem, settings: SolverSettings, rel_gap: float, abs_gap: float,
                time_limit: float, warm_start) -> MilpSolution:
    h = _highs_instance(settings)
    h.setOptionValue("mip_rel_gap", float(rel_gap))
    h.setOptionValue("mip_abs_gap", float(abs_gap))
    h.setOptionValue("mip_feasibility_tolerance", 1e-7)
    if np.isfinite(time_limit):
        h.setOptionValue("time_limit", float(time_limit))
    h.passModel(_highs_model(prob))
    if warm_start is not None:
        sol = highspy.HighsSolution()
        sol.col_value = list(np.asarray(warm_start, dtype=float))
        sol.value_valid = True
        h.setSolution(sol)
    h.run()
    MS = highspy.HighsModelStatus
    status = h.getModelStatus()
    info = h.getInfo()
    has_sol = info.primal_solution_status == 2
    if status in (MS.kInfeasible, MS.kUnboundedOrInfeasible) and not has_sol:
        return MilpSolution(MilpStatus.INFEASIBLE)
    if status == MS.kTimeLimit:
        if not has_sol:
            raise TimeLimitError("MILP time limit reached without an incumbent")
        return MilpSolution(MilpStatus.TIME_LIMIT, info.objective_function_value, info.mip_dual_bound,
                            np.asarray(h.getSolution().col_value, dtype=float))
    if status != MS.kOptimal:
        raise NumericalError(f"MILP solve ended with status {h.modelStatusToString(status)}")
    return MilpSolution(MilpStatus.OPTIMAL, info.objective_function_value, info.mip_dual_bound,
                        np.asarray(h.getSolution().col_value, dtype=float))


# ---------------------------------------------------------------------------
# scipy backend


def _scipy_lp(prob: LpProblem, settings: SolverSettings) -> LpSolution:
    from scipy.optimize import linprog

    c = -prob.c if prob.maximize else prob.c
    res = linprog(c, A_ub=prob.A_ub if prob.A_ub.shape[0] else None, b_ub=prob.b_ub if prob.A_ub.shape[0] else None,
                  A_eq=prob.A_eq if prob.A_eq.shape[0] else None, b_eq=prob.b_eq if prob.A_eq.shape[0] else None,
                  bounds=np.column_stack([prob.lower, prob.upper]), method="highs",
                  options={"primal_feasibility_tolerance": min(1e-7, settings.lp_tol),
                           "dual_feasibility_tolerance": min(1e-7, settings.lp_tol)})
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED)
    if res.status != 0:
        return LpSolution(LpStatus.NUMERICAL_FAILURE)
    # linprog marginals are sensitivities of the minimised objective
    y_ub = -np.asarray(res.ineqlin.marginals) if prob.A_ub.shape[0] else np.zeros(0)
    y_eq = -np.asarray(res.eqlin.marginals) if prob.A_eq.shape[0] else np.zeros(0)
    obj = -res.fun if prob.maximize else res.fun
    return LpSolution(LpStatus.OPTIMAL, float(obj), np.asarray(res.x), y_ub, y_eq)


def _scipy_milp(prob: LpProblem, settings: SolverSettings, rel_gap: float, abs_gap: float,
                time_limit: float) -> MilpSolution:
    from scipy.optimize import Bounds, LinearConstraint, milp

    cons = []
    if prob.A_ub.shape[0]:
        cons.append(LinearConstraint(prob.A_ub, -np.inf, prob.b_ub))
    if prob.A_eq.shape[0]:
        cons.append(LinearConstraint(prob.A_eq, prob.b_eq, prob.b_eq))
    options = {"mip_rel_gap": rel_gap}
    if np.isfinite(time_limit):
        options["time_limit"] = time_limit
    if abs_gap > 0:
        log.debug("scipy backend ignores the absolute MIP gap")
    res = milp(-prob.c if prob.maximize else prob.c, constraints=cons,
               integrality=prob.integrality, bounds=Bounds(prob.lower, prob.upper), options=options)
    if res.x is None:
        if res.status == 1:
            raise TimeLimitError("MILP time limit reached without an incumbent")
        if res.status == 2:
            return MilpSolution(MilpStatus.INFEASIBLE)
        raise NumericalError(res.message)
    sgn = -1.0 if prob.maximize else 1.0
    bound = sgn * getattr(res, "mip_dual_bound", res.fun)
    status = MilpStatus.TIME_LIMIT if res.status == 1 else MilpStatus.OPTIMAL
    return MilpSolution(status, sgn * res.fun, bound, np.asarray(res.x))


# ---------------------------------------------------------------------------
# public API


def solve_lp(problem: LpProblem | LinearProgram, warm_start: np.ndarray | None = None,
             settings: SolverSettings = DEFAULT_SETTINGS) -> LpSolution:
    """Solve an LP, returning primal and dual values on optimality.

    Infeasibility and unboundedness are reported through ``status``; numerical
    trouble is never reported as infeasible.
    """
    prob = LpProblem.from_model(problem) if isinstance(problem, LinearProgram) else problem
    backend = settings.resolved_backend()
    sol = _highs_lp(prob, settings, warm_start) if backend == "highs" else _scipy_lp(prob, settings)
    if sol.ok and __debug__:
        _check_lp(prob, sol, settings.lp_tol)
    return sol


class LpSession:
    """One LP re-solved many times with a changing cost vector or ``b_ub``.

    The highspy backend keeps the model and its basis between calls, so each
    re-solve is a warm-started simplex run; the scipy backend re-solves from
    scratch.
    """

    def __init__(self, problem: LpProblem, settings: SolverSettings = DEFAULT_SETTINGS):
        self.problem = LpProblem(problem.c.copy(), problem.A_ub, problem.b_ub.copy(), problem.A_eq, problem.b_eq,
                                 problem.lower, problem.upper, None, problem.maximize)
        self.settings = settings
        self._highs = None
        if settings.resolved_backend() == "highs":
            self._highs = _highs_instance(settings)
            self._highs.passModel(_highs_model(self.problem))
            self._ub_rows = np.arange(self.problem.A_ub.shape[0], dtype=np.int32)

    def solve(self, c: np.ndarray | None = None, b_ub: np.ndarray | None = None) -> LpSolution:
        prob = self.problem
        if c is not None:
            prob.c = np.asarray(c, dtype=float).copy()
        if b_ub is not None:
            prob.b_ub = np.asarray(b_ub, dtype=float).copy()
        if self._highs is None:
            return _scipy_lp(prob, self.settings)
        h = self._highs
        if c is not None:
            h.changeColsCost(prob.n, np.arange(prob.n, dtype=np.int32), prob.c)
        if b_ub is not None and len(self._ub_rows):
            h.changeRowsBounds(len(self._ub_rows), self._ub_rows,
                               np.full(len(self._ub_rows), -highspy.kHighsInf), prob.b_ub)
        h.run()
        return _highs_result(h, prob)


def _check_lp(prob: LpProblem, sol: LpSolution, tol: float) -> None:
    scale = 1.0 + float(np.max(np.abs(sol.primal), initial=0.0))
    if prob.residual(sol.primal) > tol * scale:
        log.warning("LP primal residual %.3g exceeds tolerance", prob.residual(sol.primal))


def require_optimal(sol: LpSolution, what: str = "LP") -> LpSolution:
    if sol.status is LpStatus.INFEASIBLE:
        raise InfeasibleError(f"{what} is infeasible")
    if sol.status is LpStatus.UNBOUNDED:
        raise UnboundedError(f"{what} is unbounded")
    if sol.status is not LpStatus.OPTIMAL:
        raise NumericalError(f"{what} failed numerically")
    return sol


def _gap_status(sol: MilpSolution, rel_gap: float, abs_gap: float) -> MilpSolution:
    if sol.status is not MilpStatus.OPTIMAL:
        return sol
    gap = abs(sol.bound - sol.objective)
    if gap <= 1e-9 * max(1.0, abs(sol.objective)):
        return sol
    sol.status = MilpStatus.GAP_LIMIT
    sol.gap_criterion = "abs" if gap <= abs_gap + 1e-12 else "rel"
    return sol


def solve_milp(problem: LpProblem, rel_gap: float = 0.1, abs_gap: float = 0.05,
               time_limit_s: float = 600.0, pool_size: int = 1,
               settings: SolverSettings = DEFAULT_SETTINGS,
               warm_start: np.ndarray | None = None) -> MilpSolution:
    """Solve a MILP with relative/absolute gap and time controls.

    With ``pool_size > 1`` the solve is repeated with no-good cuts on the
    binary variables, collecting up to ``pool_size`` incumbents with distinct
    binary patterns (best first).  Every pool member is re-verified by
    substitution.
    """
    if rel_gap < 0 or abs_gap < 0:
        raise ValueError("MIP gaps must be nonnegative")
    if problem.integrality is None:
        raise ValueError("MILP has no integer variables")
    backend = settings.resolved_backend()

    def run(prob):
        if backend == "highs":
            return _highs_milp(prob, settings, rel_gap, abs_gap, time_limit_s, warm_start)
        return _scipy_milp(prob, settings, rel_gap, abs_gap, time_limit_s)

    first = _gap_status(run(problem), rel_gap, abs_gap)
    if first.incumbent is None:
        return first
    first.pool = [first.incumbent]
    if pool_size <= 1:
        return first

    ints = np.flatnonzero(problem.integrality)
    if np.any(problem.lower[ints] < 0) or np.any(problem.upper[ints] > 1):
        raise ValueError("solution pools require all integer variables to be binary")
    A_ub, b_ub = problem.A_ub, problem.b_ub
    current = first.incumbent
    while len(first.pool) < pool_size:
        pattern = np.round(current[ints]).astype(int)
        row = np.zeros(problem.n)
        row[ints] = np.where(pattern == 1, 1.0, -1.0)
        # sum_{on}(1 - u) + sum_{off} u >= 1
        A_ub = sp.vstack([A_ub, sp.csr_matrix(row)], format="csr")
        b_ub = np.append(b_ub, pattern.sum() - 1.0)
        prob = LpProblem(problem.c, A_ub, b_ub, problem.A_eq, problem.b_eq, problem.lower, problem.upper,
                         problem.integrality, problem.maximize)
        try:
            nxt = run(prob)
        except TimeLimitError:
            break
        if nxt.incumbent is None:
            break
        current = nxt.incumbent
        if problem.residual(current) > LP_TOL * (1 + np.max(np.abs(current))):
            raise SolverError("pool member failed feasibility re-verification")
        first.pool.append(current)
    return first
