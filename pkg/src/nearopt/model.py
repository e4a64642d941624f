"""Linear programs, exploration specifications and the toy model generator.

A :class:`LinearProgram` stores a minimisation ``min c'x`` subject to
``A x <= b``, ``F x = d`` and variable bounds.  Rows are kept sparse as
``{variable name: coefficient}`` maps; :meth:`LinearProgram.arrays` produces
the matrix form used by the solver gateway.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ModelError

#: coefficients with smaller magnitude are pruned at parse time
ZERO_TOL = 1e-9

_SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf


@dataclass(frozen=True)
class Constraint:
    """A sparse row; ``sense`` is ``"<="`` or ``"="`` after normalisation."""

    name: str
    coeffs: Mapping[str, float]
    sense: str
    rhs: float


@dataclass(frozen=True)
class LpArrays:
    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class LinearProgram:
    name: str
    variables: tuple[Variable, ...]
    objective: Mapping[str, float]
    inequalities: tuple[Constraint, ...] = ()
    equalities: tuple[Constraint, ...] = ()

    def __post_init__(self):
        _validate(self)

    @property
    def n_x(self) -> int:
        return len(self.variables)

    @property
    def n_i(self) -> int:
        return len(self.inequalities)

    @property
    def n_e(self) -> int:
        return len(self.equalities)

    @property
    def var_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    def arrays(self) -> LpArrays:
        idx = self.index()
        c = np.zeros(self.n_x)
        for name, val in self.objective.items():
            c[idx[name]] = val
        return LpArrays(
            c=c,
            A_ub=_rows_to_csr(self.inequalities, idx, self.n_x),
            b_ub=np.array([r.rhs for r in self.inequalities], dtype=float),
            A_eq=_rows_to_csr(self.equalities, idx, self.n_x),
            b_eq=np.array([r.rhs for r in self.equalities], dtype=float),
            lower=np.array([v.lower for v in self.variables], dtype=float),
            upper=np.array([v.upper for v in self.variables], dtype=float),
        )


def _rows_to_csr(rows: Sequence[Constraint], idx: dict[str, int], n: int) -> sp.csr_matrix:
    data, cols, ptr = [], [], [0]
    for row in rows:
        for name, val in row.coeffs.items():
            cols.append(idx[name])
            data.append(val)
        ptr.append(len(cols))
    return sp.csr_matrix((np.array(data, dtype=float), np.array(cols, dtype=np.int64), np.array(ptr)),
                         shape=(len(rows), n))


def _validate(model: LinearProgram) -> None:
    names = set()
    for v in model.variables:
        if v.name in names:
            raise ModelError(f"duplicate variable {v.name!r}")
        names.add(v.name)
        if v.lower > v.upper:
            raise ModelError(f"variable {v.name!r} has lower bound {v.lower} > upper bound {v.upper}")
    for name in model.objective:
        if name not in names:
            raise ModelError(f"objective references unknown variable {name!r}")
    for row in (*model.inequalities, *model.equalities):
        if not row.coeffs:
            raise ModelError(f"constraint {row.name!r} has no nonzero coefficient")
        for name in row.coeffs:
            if name not in names:
                raise ModelError(f"constraint {row.name!r} references unknown variable {name!r}")
    for row in model.inequalities:
        if row.sense != "<=":
            raise ModelError(f"inequality {row.name!r} is not normalised to '<='")
    for row in model.equalities:
        if row.sense != "=":
            raise ModelError(f"equality {row.name!r} has sense {row.sense!r}")


# ---------------------------------------------------------------------------
# model file format


def _bound(value: Any, default: float, where: str) -> float:
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"{where}: bound must be a number or null")
    return float(value)


def _prune(coeffs: Mapping[str, Any], where: str) -> dict[str, float]:
    out = {}
    for name, val in coeffs.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ModelError(f"{where}: coefficient of {name!r} is not a number")
        if abs(val) >= ZERO_TOL:
            out[name] = float(val)
    return out


def model_from_dict(doc: Mapping[str, Any]) -> LinearProgram:
    """Build a validated model from the decoded JSON document."""
    if not isinstance(doc, Mapping):
        raise ModelError("model document must be a JSON object")
    for key in ("vars", "objective", "constraints"):
        if key not in doc:
            raise ModelError(f"model document is missing key {key!r}")
    variables = []
    for k, v in enumerate(doc["vars"]):
        if not isinstance(v, Mapping) or "name" not in v:
            raise ModelError(f"vars[{k}] must be an object with a 'name'")
        variables.append(Variable(str(v["name"]),
                                  _bound(v.get("lb", 0.0), -math.inf, f"vars[{k}].lb"),
                                  _bound(v.get("ub"), math.inf, f"vars[{k}].ub")))
    inequalities, equalities = [], []
    for k, row in enumerate(doc["constraints"]):
        name = str(row.get("name", f"c{k}"))
        sense = row.get("sense")
        if sense not in _SENSES:
            raise ModelError(f"constraint {name!r}: sense must be one of {_SENSES}, got {sense!r}")
        coeffs = _prune(row.get("coeffs", {}), f"constraint {name!r}")
        rhs = row.get("rhs")
        if isinstance(rhs, bool) or not isinstance(rhs, (int, float)):
            raise ModelError(f"constraint {name!r}: rhs must be a number")
        rhs = float(rhs)
        if sense == ">=":
            inequalities.append(Constraint(name, {n: -c for n, c in coeffs.items()}, "<=", -rhs))
        elif sense == "<=":
            inequalities.append(Constraint(name, coeffs, "<=", rhs))
        else:
            equalities.append(Constraint(name, coeffs, "=", rhs))
    return LinearProgram(
        name=str(doc.get("name", "model")),
        variables=tuple(variables),
        objective=_prune(doc["objective"], "objective"),
        inequalities=tuple(inequalities),
        equalities=tuple(equalities),
    )


def parse_model(text: str) -> LinearProgram:
    """Parse a JSON model document. Syntax errors report line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(doc)


def _num(x: float) -> float | None:
    return None if math.isinf(x) else x


def model_to_dict(model: LinearProgram) -> dict[str, Any]:
    rows = [{"name": r.name, "coeffs": dict(r.coeffs), "sense": r.sense, "rhs": r.rhs}
            for r in (*model.inequalities, *model.equalities)]
    return {
        "name": model.name,
        "vars": [{"name": v.name, "lb": _num(v.lower), "ub": _num(v.upper)} for v in model.variables],
        "objective": dict(model.objective),
        "constraints": rows,
    }


def serialize_model(model: LinearProgram) -> str:
    return json.dumps(model_to_dict(model), indent=1)


def load_model(path) -> LinearProgram:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# ---------------------------------------------------------------------------
# exploration


@dataclass(frozen=True)
class ExplorationSpec:
    """What to explore and how tight.

    ``explored`` lists variable names (unit-row projection); alternatively
    ``projection`` holds ``(row, var, coeff)`` triplets of an explicit S.
    ``cost_cut=None`` lets :func:`build_exploration` decide whether the cost
    under-approximation is provably valid.
    """

    explored: tuple[str, ...] = ()
    projection: tuple[tuple[int, str, float], ...] = ()
    epsilon: float = 0.1
    epsilon_abs: float | None = None
    tolerance: float = 1e-2
    z_names: tuple[str, ...] = ()
    cost_cut: bool | None = None
    import_rows: bool = True

    def __post_init__(self):
        if bool(self.explored) == bool(self.projection):
            raise ModelError("exactly one of 'explore' and 'projection' must be given")
        if self.epsilon < 0:
            raise ModelError("epsilon must be nonnegative")
        if self.epsilon_abs is not None and self.epsilon_abs < 0:
            raise ModelError("epsilon_abs must be nonnegative")
        if not self.tolerance > 0:
            raise ModelError("tolerance must be positive")

    @property
    def n_z(self) -> int:
        if self.explored:
            return len(self.explored)
        return 1 + max(r for r, _, _ in self.projection)

    def names(self) -> list[str]:
        if self.z_names:
            return list(self.z_names)
        if self.explored:
            return list(self.explored)
        return [f"z{k}" for k in range(self.n_z)]

    def matrix(self, model: LinearProgram) -> sp.csr_matrix:
        idx = model.index()
        if self.explored:
            for name in self.explored:
                if name not in idx:
                    raise ModelError(f"explored variable {name!r} is not declared")
            rows = list(range(len(self.explored)))
            cols = [idx[n] for n in self.explored]
            vals = [1.0] * len(rows)
        else:
            rows, cols, vals = [], [], []
            for r, name, coeff in self.projection:
                if name not in idx:
                    raise ModelError(f"projection references unknown variable {name!r}")
                rows.append(r)
                cols.append(idx[name])
                vals.append(float(coeff))
        S = sp.csr_matrix((vals, (rows, cols)), shape=(self.n_z, model.n_x))
        S.sum_duplicates()
        if np.linalg.matrix_rank(S.toarray()) < self.n_z:
            raise ModelError("projection rows are not linearly independent")
        return S

    def is_unit_projection(self) -> bool:
        return bool(self.explored)


def spec_from_dict(doc: Mapping[str, Any]) -> ExplorationSpec:
    try:
        projection = tuple((int(p["row"]), str(p["var"]), float(p["coeff"]))
                           for p in doc.get("projection", ()))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed projection entry: {exc}") from exc
    return ExplorationSpec(
        explored=tuple(doc.get("explore", ())),
        projection=projection,
        epsilon=float(doc.get("epsilon", 0.1)),
        epsilon_abs=None if doc.get("epsilon_abs") is None else float(doc["epsilon_abs"]),
        tolerance=float(doc.get("tolerance", 1e-2)),
        z_names=tuple(doc.get("z_names", ())),
        cost_cut=doc.get("cost_cut"),
        import_rows=bool(doc.get("import_rows", True)),
    )


def spec_to_dict(spec: ExplorationSpec) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    if spec.explored:
        doc["explore"] = list(spec.explored)
    else:
        doc["projection"] = [{"row": r, "var": v, "coeff": c} for r, v, c in spec.projection]
    doc.update(epsilon=spec.epsilon, tolerance=spec.tolerance)
    if spec.epsilon_abs is not None:
        doc["epsilon_abs"] = spec.epsilon_abs
    if spec.z_names:
        doc["z_names"] = list(spec.z_names)
    if spec.cost_cut is not None:
        doc["cost_cut"] = spec.cost_cut
    doc["import_rows"] = spec.import_rows
    return doc


def load_spec(path) -> ExplorationSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"spec syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return spec_from_dict(doc)


def derive_z_bounds(model: LinearProgram, spec: ExplorationSpec,
                    allow_unbounded: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Interval propagation of the variable bounds through the projection."""
    S = spec.matrix(model).tocoo()
    arr = model.arrays()
    lo = np.zeros(spec.n_z)
    hi = np.zeros(spec.n_z)
    for r, j, s in zip(S.row, S.col, S.data):
        a, b = s * arr.lower[j], s * arr.upper[j]
        lo[r] += min(a, b)
        hi[r] += max(a, b)
    lo = np.where(np.isnan(lo), -math.inf, lo)
    hi = np.where(np.isnan(hi), math.inf, hi)
    if not allow_unbounded and not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        bad = [spec.names()[k] for k in range(spec.n_z) if not (np.isfinite(lo[k]) and np.isfinite(hi[k]))]
        raise ModelError(f"exploratory directions {bad} are unbounded and the cost cut is disabled")
    return lo, hi


def cost_cut_is_valid(model: LinearProgram, spec: ExplorationSpec) -> bool:
    """True when (S c)'z provably under-estimates c'x on the feasible set.

    Holds for a unit projection when every objective coefficient and every
    variable lower bound is nonnegative.
    """
    if not spec.is_unit_projection():
        return False
    arr = model.arrays()
    return bool(np.all(arr.c >= 0) and np.all(arr.lower >= 0))


@dataclass(frozen=True)
class ExplorationProblem:
    model: LinearProgram
    spec: ExplorationSpec
    v_star: float
    budget: float
    z_lower: np.ndarray
    z_upper: np.ndarray
    S: sp.csr_matrix = field(repr=False)
    arrays: LpArrays = field(repr=False)
    cost_cut: bool = False
    x_star: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_z(self) -> int:
        return self.spec.n_z

    @property
    def z_names(self) -> list[str]:
        return self.spec.names()

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.S @ x, dtype=float)

    def cost_coefficients(self) -> np.ndarray:
        """The under-approximating cost vector S c."""
        return np.asarray(self.S @ self.arrays.c, dtype=float)


def budget_for(v_star: float, epsilon: float, epsilon_abs: float | None) -> float:
    if v_star > 0:
        return v_star * (1.0 + epsilon)
    if epsilon_abs is None:
        raise ModelError(f"optimal value {v_star} is not positive; an absolute slack epsilon_abs is required")
    return v_star + epsilon_abs


def build_exploration(model: LinearProgram, spec: ExplorationSpec, v_star: float,
                      x_star: np.ndarray | None = None) -> ExplorationProblem:
    """Attach the budget and z-box to a model whose optimum is ``v_star``.

    Infinite z-bounds are only accepted with the cost cut; they are then
    tightened by maximising/minimising each direction over the budgeted model.
    """
    budget = budget_for(v_star, spec.epsilon, spec.epsilon_abs)
    use_cost_cut = cost_cut_is_valid(model, spec) if spec.cost_cut is None else bool(spec.cost_cut)
    lo, hi = derive_z_bounds(model, spec, allow_unbounded=use_cost_cut)
    S = spec.matrix(model)
    arrays = model.arrays()
    problem = ExplorationProblem(model, spec, float(v_star), float(budget), lo, hi, S, arrays,
                                 use_cost_cut, x_star)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        from .formulations import budgeted_extremes

        lo2, hi2 = budgeted_extremes(problem, np.flatnonzero(~(np.isfinite(lo) & np.isfinite(hi))))
        problem = ExplorationProblem(model, spec, float(v_star), float(budget),
                                     np.where(np.isfinite(lo), lo, lo2), np.where(np.isfinite(hi), hi, hi2),
                                     S, arrays, use_cost_cut, x_star)
    return problem


# ---------------------------------------------------------------------------
# toy capacity-expansion generator


def generate_toy_model(seed: int, n_tech: int, n_periods: int) -> LinearProgram:
    """Seeded greenfield capacity-expansion LP.

    Variables ``cap_<i>`` (installed capacity, bounded) and ``gen_<i>_<h>``
    (dispatch); per period a demand balance equality and per (tech, period)
    an availability limit ``gen - avail * cap <= 0``.  Technology 0 is firm
    (availability 1) and can cover peak demand alone, so the model is always
    feasible.  All costs are nonnegative.
    """
    if n_tech < 2 or n_periods < 1:
        raise ModelError("toy model needs n_tech >= 2 and n_periods >= 1")
    rng = np.random.default_rng(seed)

    def r3(x):
        return float(round(float(x), 3))

    demand = [r3(rng.uniform(5.0, 10.0)) for _ in range(n_periods)]
    peak = max(demand)
    inv = [r3(rng.uniform(0.5, 1.5)) for _ in range(n_tech)]
    var = [r3(rng.uniform(0.0, 1.0)) for _ in range(n_tech)]
    avail = [[1.0] * n_periods] + [[r3(rng.uniform(0.2, 1.0)) for _ in range(n_periods)]
                                   for _ in range(n_tech - 1)]
    cap_max = [r3(peak * rng.uniform(1.1, 1.6)) for _ in range(n_tech)]
    weight = r3(1.0 / n_periods)

    variables = [Variable(f"cap_{i}", 0.0, cap_max[i]) for i in range(n_tech)]
    variables += [Variable(f"gen_{i}_{h}", 0.0, math.inf) for i in range(n_tech) for h in range(n_periods)]
    objective = {f"cap_{i}": inv[i] for i in range(n_tech)}
    for i in range(n_tech):
        if var[i] >= ZERO_TOL:
            for h in range(n_periods):
                objective[f"gen_{i}_{h}"] = r3(var[i] * weight * 4.0)
    equalities = tuple(
        Constraint(f"balance_{h}", {f"gen_{i}_{h}": 1.0 for i in range(n_tech)}, "=", demand[h])
        for h in range(n_periods))
    inequalities = tuple(
        Constraint(f"avail_{i}_{h}", {f"gen_{i}_{h}": 1.0, f"cap_{i}": -avail[i][h]}, "<=", 0.0)
        for i in range(n_tech) for h in range(n_periods))
    return LinearProgram(f"toy_s{seed}_t{n_tech}_p{n_periods}", tuple(variables), objective,
                         inequalities, equalities)


def toy_spec(model: LinearProgram, epsilon: float = 0.1, tolerance: float | None = None) -> ExplorationSpec:
    """Explore all capacity variables of a toy model."""
    caps = tuple(v.name for v in model.variables if v.name.startswith("cap_"))
    if tolerance is None:
        span = max(v.upper - v.lower for v in model.variables if v.name in caps)
        tolerance = 0.01 * span
    return ExplorationSpec(explored=caps, epsilon=epsilon, tolerance=tolerance)


def strip_model() -> LinearProgram:
    """Two-variable fixture: ``min x1 + x2`` s.t. ``x1 + x2 >= 1`` on the unit box."""
    return model_from_dict({
        "name": "strip",
        "vars": [{"name": "x1", "lb": 0, "ub": 1}, {"name": "x2", "lb": 0, "ub": 1}],
        "objective": {"x1": 1, "x2": 1},
        "constraints": [{"name": "cover", "coeffs": {"x1": 1, "x2": 1}, "sense": ">=", "rhs": 1}],
    })
