import numpy as np
import pytest

from nearopt.errors import InfeasibleError
from nearopt.model import generate_toy_model, model_from_dict, toy_spec
from nearopt.oracle import (OracleOptions, build_maxmin_milp, closest_near_optimal, furthest_point,
                            furthest_vertex, optimal_value, run_oracle, separating_cut, setup_exploration,
                            value_function_cut)
from nearopt.regions import OuterApprox, make_inner, outer_contains

from oracles import (hull_distance, maxmin_distance, near_optimal_distance, near_optimal_extremes,
                     value_function)

EXACT = dict(rel_gap=0.0, abs_gap=1e-7)


@pytest.fixture(scope="module")
def toy7():
    m = generate_toy_model(7, 6, 4)
    return setup_exploration(m, toy_spec(m))


def test_optimal_value_errors():
    bad = model_from_dict({"vars": [{"name": "x", "ub": 1}], "objective": {"x": 1},
                           "constraints": [{"coeffs": {"x": 1}, "sense": ">=", "rhs": 2}]})
    with pytest.raises(InfeasibleError):
        optimal_value(bad)


def test_milp_binary_count(tri_outer):
    milp = build_maxmin_milp(tri_outer, make_inner([[0, 1], [1, 0]]))
    assert milp.n_binaries == 6
    assert build_maxmin_milp(tri_outer, make_inner([[0, 1]])).n_binaries == 5


@pytest.mark.parametrize("method", ["milp", "vertex"])
def test_furthest_point_examples(box, tri_outer, method):
    r = furthest_point(box, make_inner([[0, 0]]), method=method, **EXACT)
    # every box point with a unit coordinate ties with the corner (1, 1) in the inf-norm
    assert r.d_io == pytest.approx(1.0, abs=1e-6) and np.max(r.z_trial) == pytest.approx(1.0, abs=1e-6)
    r = furthest_point(tri_outer, make_inner([[0, 1], [1, 0]]), method=method, **EXACT)
    assert r.d_io == pytest.approx(0.25, abs=1e-6)
    assert outer_contains(tri_outer, r.z_trial, 1e-7)
    pt = OuterApprox(np.array([0.3, 0.4]), np.array([0.3, 0.4]))
    assert furthest_point(pt, make_inner([[0.3, 0.4]]), method=method, **EXACT).d_io <= 1e-7


def test_norm_activity_pattern(tri_outer):
    r = furthest_point(tri_outer, make_inner([[0, 1], [1, 0]]), **EXACT)
    assert 1 <= r.norm_active <= 2
    assert r.bound >= r.d_io - 1e-7
    assert r.d_verified == pytest.approx(r.d_io, abs=1e-6)


def test_milp_matches_vertex_metric_random_3d():
    rng = np.random.default_rng(11)
    for _ in range(3):
        P = rng.random((4, 3))
        outer = OuterApprox(np.zeros(3), np.ones(3))
        a = furthest_point(outer, make_inner(P), **EXACT).d_io
        b = furthest_vertex(outer, make_inner(P)).d_io
        assert a == pytest.approx(b, abs=1e-5)


def test_closest_near_optimal_tri(tri):
    fr = closest_near_optimal(tri, np.array([0.9, 0.9]))
    assert fr.z_feasible == pytest.approx([0.75, 0.75], abs=1e-7)
    assert fr.delta == pytest.approx(0.15, abs=1e-7)
    cut = separating_cut(fr, np.array([0.9, 0.9]))
    assert cut.normal == pytest.approx([1, 1]) and cut.offset == pytest.approx(1.5)
    assert cut.normal @ np.array([0.9, 0.9]) > cut.offset
    feas = closest_near_optimal(tri, np.array([0.75, 0.75]))
    assert feas.delta <= 1e-9 and feas.z_feasible == pytest.approx([0.75, 0.75])
    assert separating_cut(feas, np.array([0.75, 0.75])) is None


def test_value_cut_tri(tri):
    cut, vf = value_function_cut(tri, np.array([0.75, 0.75]))
    assert vf == pytest.approx(1.5)
    assert cut.normal == pytest.approx([1, 1]) and cut.offset == pytest.approx(1.5)


def test_toy_closest_and_value_cut(toy7):
    fr = closest_near_optimal(toy7, toy7.z_upper)
    assert fr.delta > 0 and np.max(np.abs(fr.mu)) > 0
    z0 = toy7.project(toy7.x_star)
    cut, vf = value_function_cut(toy7, z0)
    assert vf == pytest.approx(toy7.v_star, rel=1e-9)
    # the linearisation touches the value function at z_f: slack there is budget - v_f
    assert cut.offset - cut.normal @ z0 == pytest.approx(toy7.budget - vf, abs=1e-7)


def test_value_cut_underestimates(toy7):
    rng = np.random.default_rng(0)
    z0 = toy7.project(toy7.x_star)
    cut, vf = value_function_cut(toy7, z0)
    lam = cut.normal
    for z in toy7.z_lower + rng.random((20, toy7.n_z)) * (toy7.z_upper - toy7.z_lower):
        v = value_function(toy7, z)
        if v is not None:
            assert vf + lam @ (z - z0) <= v + 1e-6


def test_run_oracle_tri(tri):
    res = run_oracle(tri, 0.01, options=OracleOptions(**EXACT))
    assert res.converged and res.d_io <= 0.01 and len(res.trace) <= 20
    G, h = res.outer.inequalities()
    for rec in res.trace:
        assert rec.certified
    d_ref, _ = maxmin_distance(G, h, res.inner.points)
    assert d_ref <= 0.01 + 1e-6


def test_run_oracle_trivial_tolerance(tri):
    res = run_oracle(tri, 5.0)
    assert res.converged and len(res.trace) == 1 and not res.cuts


def test_run_oracle_not_converged(toy7):
    res = run_oracle(toy7, 1e-6, max_iter=3, options=OracleOptions(metric="vertex"))
    assert not res.converged and len(res.trace) == 4


def test_run_oracle_argument_errors(tri):
    with pytest.raises(ValueError):
        run_oracle(tri, 0.0)
    with pytest.raises(ValueError):
        run_oracle(tri, 0.1, max_iter=0)


def test_heuristic_metric_mode(toy7):
    tol = toy7.spec.tolerance
    res = run_oracle(toy7, tol, 300, OracleOptions(metric="vertex", exact_metric_every=0))
    assert res.converged
    assert any(not r.certified for r in res.trace)
    assert res.trace[-1].certified and res.trace[-1].d_io <= tol


def test_pool_mode(tri):
    res = run_oracle(tri, 0.01, options=OracleOptions(pool_size=3, workers=2, **EXACT))
    assert res.converged
    for c in res.cuts:
        assert c.margin > 0


@pytest.mark.slow
def test_run_oracle_toy_half_percent(toy7):
    tol = 0.005 * float(np.max(toy7.z_upper - toy7.z_lower))
    res = run_oracle(toy7, tol, 300, OracleOptions(metric="vertex", **EXACT))
    assert res.converged and res.trace[-1].bound <= tol
    for z in res.inner.points:
        assert near_optimal_distance(toy7, z) <= 1e-6
    G, h = res.outer.inequalities()
    rng = np.random.default_rng(0)
    truth = near_optimal_extremes(toy7, 30, rng)
    assert np.all(truth @ G.T <= h + 1e-6 * np.maximum(1.0, np.abs(h)))
    assert max(hull_distance(res.inner.points, z) for z in truth) <= tol + 1e-6
