"""Invariants of the exploration on random small models."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nearopt.model import ExplorationSpec, model_from_dict
from nearopt.oracle import (OracleOptions, closest_near_optimal, run_oracle, separating_cut,
                            setup_exploration, value_function_cut)
from nearopt.regions import Halfspace

from oracles import hull_distance, near_optimal_distance, near_optimal_extremes, value_function


def random_problem(seed, general_projection=False):
    """Covering LP in three variables; always feasible and bounded."""
    rng = np.random.default_rng(seed)
    names = ["x1", "x2", "x3"]
    ub = rng.uniform(1.0, 3.0, 3)
    rows = []
    for i in range(rng.integers(1, 4)):
        a = rng.uniform(0.2, 1.0, 3)
        rows.append({"name": f"r{i}", "coeffs": {n: -float(v) for n, v in zip(names, a)}, "sense": "<=",
                     "rhs": -float(rng.uniform(0.2, 0.8) * a @ ub)})
    doc = {"vars": [{"name": n, "ub": float(u)} for n, u in zip(names, ub)],
           "objective": {n: float(v) for n, v in zip(names, rng.uniform(0.5, 2.0, 3))},
           "constraints": rows}
    if general_projection:
        spec = ExplorationSpec(projection=((0, "x1", 1.0), (0, "x3", 1.0), (1, "x2", 1.0)), epsilon=0.2)
    else:
        spec = ExplorationSpec(explored=("x1", "x2"), epsilon=0.2)
    return setup_exploration(model_from_dict(doc), spec)


EXACT = OracleOptions(rel_gap=0.0, abs_gap=1e-7)
problems = st.builds(random_problem, st.integers(0, 10_000), st.booleans())


@settings(max_examples=15)
@given(problems, st.integers(0, 100))
def test_sandwich_and_cut_validity(problem, seed):
    res = run_oracle(problem, 0.02, max_iter=40, options=EXACT)
    # every inner point is near-optimal
    for z in res.inner.points:
        assert near_optimal_distance(problem, z) <= 1e-6
    # every near-optimal point satisfies every accepted cut
    truth = near_optimal_extremes(problem, 12, np.random.default_rng(seed))
    G, h = res.outer.inequalities()
    assert np.all(truth @ G.T <= h + 1e-6 * np.maximum(1.0, np.abs(h)))
    # the certified bound covers the true set's distance to the inner hull
    last = res.trace[-1]
    for z in truth:
        assert hull_distance(res.inner.points, z) <= last.bound + 1e-6


@given(problems, st.integers(0, 10_000))
def test_projection_soundness(problem, seed):
    rng = np.random.default_rng(seed)
    z = problem.z_lower + rng.random(problem.n_z) * (problem.z_upper - problem.z_lower)
    fr = closest_near_optimal(problem, z)
    assert near_optimal_distance(problem, fr.z_feasible) <= 1e-7
    assert abs(fr.delta - near_optimal_distance(problem, z)) <= 1e-7
    assert abs(np.max(np.abs(fr.z_feasible - z)) - fr.delta) <= 1e-7


@given(problems, st.integers(0, 10_000))
def test_dual_cut_supports_and_separates(problem, seed):
    rng = np.random.default_rng(seed)
    z = problem.z_lower - 0.5 + rng.random(problem.n_z) * (problem.z_upper - problem.z_lower + 1.0)
    fr = closest_near_optimal(problem, z)
    cut = separating_cut(fr, z)
    if cut is None:
        return
    assert np.max(np.abs(cut.normal)) == 1.0
    # the cut passes through the closest near-optimal point and cuts off the trial point
    assert abs(cut.normal @ fr.z_feasible - cut.offset) <= 1e-9 * max(1.0, abs(cut.offset))
    assert cut.violation(z) > 0
    truth = near_optimal_extremes(problem, 8, rng)
    assert np.all(truth @ cut.normal <= cut.offset + 1e-6)


@given(problems, st.integers(0, 10_000))
def test_value_cut_is_valid(problem, seed):
    rng = np.random.default_rng(seed)
    zf = near_optimal_extremes(problem, 1, rng)[0]
    cut, vf = value_function_cut(problem, zf)
    if cut is None:
        return
    for z in near_optimal_extremes(problem, 8, rng):
        assert cut.violation(z) <= 1e-6
    for z in problem.z_lower + rng.random((10, problem.n_z)) * (problem.z_upper - problem.z_lower):
        v = value_function(problem, z)
        if v is not None:
            assert vf + cut.normal @ (z - zf) <= v + 1e-6


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=6), st.floats(-1e3, 1e3))
def test_normalization(normal, offset):
    a = np.array(normal)
    if np.max(np.abs(a)) < 1e-12:
        return
    h = Halfspace(a, offset).normalized()
    assert np.max(np.abs(h.normal)) == 1.0
    z = np.linspace(-1, 1, len(a))
    # same halfspace, rescaled
    assert np.sign(h.violation(z)) == np.sign(Halfspace(a, offset).violation(z)) or abs(h.violation(z)) < 1e-9
