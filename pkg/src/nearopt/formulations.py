"""LPs built over the budgeted system model.

Column layout is always ``[x, extra...]``; the budgeted model contributes the
rows ``A x <= b``, ``c'x <= budget`` and ``F x = d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import ExplorationProblem
from .solver import DEFAULT_SETTINGS, LpProblem, LpSolution, SolverSettings, require_optimal, solve_lp


def _pad(M: sp.spmatrix, extra: int) -> sp.csr_matrix:
    if extra == 0:
        return sp.csr_matrix(M)
    return sp.hstack([M, sp.csr_matrix((M.shape[0], extra))], format="csr")


def budgeted(problem: ExplorationProblem, cost: np.ndarray, extra_cols: int = 0,
             budget: bool = True) -> LpProblem:
    """The system model (optionally with the budget row) and objective ``cost``."""
    a = problem.arrays
    A_ub, b_ub = a.A_ub, a.b_ub
    if budget:
        A_ub = sp.vstack([A_ub, sp.csr_matrix(a.c)], format="csr")
        b_ub = np.append(b_ub, problem.budget)
    lower = np.concatenate([a.lower, np.full(extra_cols, -np.inf)])
    upper = np.concatenate([a.upper, np.full(extra_cols, np.inf)])
    return LpProblem(np.asarray(cost, dtype=float), _pad(A_ub, extra_cols), b_ub,
                     _pad(a.A_eq, extra_cols), a.b_eq, lower, upper)


def mga_lp(problem: ExplorationProblem, w: np.ndarray) -> LpProblem:
    """``min w' S x`` over the budgeted model."""
    return budgeted(problem, np.asarray(problem.S.T @ np.asarray(w, dtype=float)).ravel())


@dataclass
class ClosestPoint:
    z: np.ndarray
    delta: float
    mu: np.ndarray
    x: np.ndarray


def closest_point(problem: ExplorationProblem, z_trial: np.ndarray,
                  settings: SolverSettings = DEFAULT_SETTINGS,
                  warm_start: np.ndarray | None = None) -> ClosestPoint:
    """Nearest budget-feasible point in the inf-norm.

    Rows ``z - S x <= t`` and ``S x - z <= t``; ``mu`` is the difference of
    their (nonnegative) duals, so ``mu'z_trial - mu'z_f = delta`` with
    ``||mu||_1 = 1`` whenever ``delta > 0``.
    """
    z_trial = np.asarray(z_trial, dtype=float)
    n_x, n_z = problem.model.n_x, problem.n_z
    base = budgeted(problem, np.zeros(n_x + 1), extra_cols=1)
    base.c[-1] = 1.0
    base.lower[-1] = 0.0
    S = problem.S
    t_col = sp.csr_matrix(-np.ones((n_z, 1)))
    rows = sp.vstack([sp.hstack([-S, t_col]), sp.hstack([S, t_col])], format="csr")
    n_base = base.A_ub.shape[0]
    lp = LpProblem(base.c, sp.vstack([base.A_ub, rows], format="csr"),
                   np.concatenate([base.b_ub, -z_trial, z_trial]), base.A_eq, base.b_eq,
                   base.lower, base.upper)
    ws = None if warm_start is None else np.append(warm_start, 0.0)
    sol = require_optimal(solve_lp(lp, ws, settings), "closest near-optimal point LP")
    x = sol.primal[:n_x]
    y = sol.duals_ineq[n_base:]
    mu = y[:n_z] - y[n_z:]
    z_f = problem.project(x)
    delta = float(np.max(np.abs(z_trial - z_f)))
    return ClosestPoint(z_f, delta, mu, x)


def near_optimal_distance(problem: ExplorationProblem, z: np.ndarray,
                          settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    return closest_point(problem, z, settings).delta


@dataclass
class ValueFunction:
    value: float
    gradient: np.ndarray
    x: np.ndarray


def value_function(problem: ExplorationProblem, z: np.ndarray,
                   settings: SolverSettings = DEFAULT_SETTINGS,
                   warm_start: np.ndarray | None = None) -> ValueFunction | None:
    """Minimum cost with ``S x = z`` and no budget row; ``None`` if infeasible.

    The gradient is the sensitivity of the optimal cost to the fixing rows.
    """
    a = problem.arrays
    n_eq = a.A_eq.shape[0]
    lp = LpProblem(a.c, a.A_ub, a.b_ub, sp.vstack([a.A_eq, problem.S], format="csr"),
                   np.concatenate([a.b_eq, np.asarray(z, dtype=float)]), a.lower, a.upper)
    sol: LpSolution = solve_lp(lp, warm_start, settings)
    if not sol.ok:
        return None
    return ValueFunction(sol.objective, -sol.duals_eq[n_eq:], sol.primal)


def budgeted_extremes(problem: ExplorationProblem, which, settings: SolverSettings = DEFAULT_SETTINGS):
    """Min and max of the selected z-components over the budgeted model."""
    lo = np.full(problem.n_z, np.nan)
    hi = np.full(problem.n_z, np.nan)
    for k in which:
        e = np.zeros(problem.n_z)
        e[k] = 1.0
        lo[k] = require_optimal(solve_lp(mga_lp(problem, e), settings=settings), "z-bound LP").objective
        hi[k] = -require_optimal(solve_lp(mga_lp(problem, -e), settings=settings), "z-bound LP").objective
    return lo, hi
