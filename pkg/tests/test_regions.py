import numpy as np
import pytest

from nearopt.errors import InvalidCutError, MembershipError, RegionError
from nearopt.model import ExplorationSpec, strip_model
from nearopt.oracle import setup_exploration
from nearopt.regions import (Halfspace, OuterApprox, hull_distance, init_regions, inner_add_point,
                             inner_at_iteration, inner_contains, make_inner, outer_add_halfspace,
                             outer_contains, outer_vertices, prune_inner, read_halfspaces_csv,
                             read_points_csv, write_halfspaces_csv, write_points_csv)

from oracles import TRI_VERTICES, vertices


def test_inner_contains_barycentric():
    inner = make_inner([[0, 0], [1, 0], [0, 1]])
    res = inner_contains(inner, np.array([0.25, 0.25]))
    assert res.member
    assert res.weights == pytest.approx([0.5, 0.25, 0.25], abs=1e-7)
    out = inner_contains(inner, np.array([0.6, 0.6]))
    assert not out.member and out.distance == pytest.approx(0.1)
    # separator: s'z exceeds s'p for every stored point
    assert np.all(inner.points @ out.separator < out.separator @ np.array([0.6, 0.6]))
    one = inner_contains(make_inner([[1, 1]]), np.array([1.0, 1.0]))
    assert one.member and one.weights == pytest.approx([1.0])


def test_inner_add_point_dedup_and_redundant():
    inner = make_inner([[0, 1]])
    inner = inner_add_point(inner, np.array([1.0, 0.0]), "x")
    assert inner.m == 2
    assert inner_add_point(inner, np.array([0.0, 1.0 + 1e-9])).m == 2
    inner3 = inner_add_point(inner, np.array([0.5, 0.5]), check_redundant=True)
    assert inner3.m == 3 and inner3.redundant[-1]
    assert prune_inner(inner3).m == 2


def test_outer_add_halfspace_rules(box):
    tri_box = outer_add_halfspace(box, Halfspace(np.array([2.0, 2.0]), 3.0, "cost-cut"))
    assert tri_box.halfspaces[0].normal.tolist() == [1.0, 1.0]
    assert tri_box.halfspaces[0].offset == 1.5
    V = outer_vertices(tri_box)
    for v in ([1, 0.5], [0.5, 1]):
        assert np.min(np.max(np.abs(V - v), axis=1)) < 1e-12
    assert outer_add_halfspace(box, Halfspace(np.array([1.0, 0.0]), 2.0)) is box
    weaker = outer_add_halfspace(tri_box, Halfspace(np.array([1.0, 1.0]), 1.7))
    assert weaker is tri_box
    tighter = outer_add_halfspace(tri_box, Halfspace(np.array([1.0, 1.0]), 1.4))
    assert tighter.k == 1 and tighter.halfspaces[0].offset == 1.4
    with pytest.raises(InvalidCutError):
        outer_add_halfspace(box, Halfspace(np.array([1.0, 0.0]), -1.0), make_inner([[0, 1]]))
    with pytest.raises(RegionError):
        Halfspace(np.zeros(2), 1.0).normalized()


def test_outer_contains(tri_outer):
    assert outer_contains(tri_outer, np.array([0.75, 0.75]))
    assert not outer_contains(tri_outer, np.array([0.9, 0.9]))
    assert not outer_contains(tri_outer, np.array([0.0, 0.0]))


def test_init_regions_tri(tri):
    z0 = tri.project(tri.x_star)
    inner, outer = init_regions(tri, [z0])
    assert inner.m == 1
    assert sorted(h.provenance for h in outer.halfspaces) == ["cost-cut", "model-row"]
    V = outer_vertices(outer)
    assert len(V) == 4
    for v in TRI_VERTICES:
        assert np.min(np.max(np.abs(V - v), axis=1)) < 1e-9
    _, box_only = init_regions(tri, [z0], cost_cut=False, import_rows=False)
    assert box_only.k == 0
    with pytest.raises(MembershipError):
        init_regions(tri, [np.array([0.9, 0.601 + 0.0])])


def test_outer_vertices_high_dim_matches_bruteforce():
    rng = np.random.default_rng(3)
    n = 4
    cuts = tuple(Halfspace(g, float(np.abs(g).sum() * 0.4)) for g in rng.normal(size=(6, n)))
    outer = OuterApprox(np.zeros(n) - 1, np.ones(n), cuts)
    V = outer_vertices(outer)
    G, h = outer.inequalities()
    ref = vertices(G, h)
    assert len(V) == len(ref)
    for v in ref:
        assert np.min(np.max(np.abs(V - v), axis=1)) < 1e-7


def test_csv_round_trip(tmp_path, tri_outer):
    inner = make_inner([[0, 1], [1, 0]], ["optimum", "oracle:1"])
    write_points_csv(tmp_path / "p.csv", inner, ["a", "b"])
    back, names = read_points_csv(tmp_path / "p.csv")
    assert names == ["a", "b"] and np.array_equal(back.points, inner.points) and back.tags == inner.tags
    write_halfspaces_csv(tmp_path / "h.csv", tri_outer, ["a", "b"])
    outer, names = read_halfspaces_csv(tmp_path / "h.csv")
    assert np.array_equal(outer.lower, tri_outer.lower) and np.array_equal(outer.upper, tri_outer.upper)
    assert [h.offset for h in outer.halfspaces] == [1.5, -1.0]


def test_iteration_snapshots():
    inner = make_inner([[0, 1]])
    inner = inner_add_point(inner, np.array([1.0, 0.0]), "k", 3)
    assert inner_at_iteration(inner, 2).m == 1 and inner_at_iteration(inner, 3).m == 2


def test_hull_distance_matches_oracle():
    from oracles import hull_distance as ref
    rng = np.random.default_rng(0)
    P = rng.random((7, 3))
    for z in rng.random((10, 3)) * 2 - 0.5:
        assert hull_distance(P, z).distance == pytest.approx(ref(P, z), abs=1e-8)


def test_spec_setup_strip():
    p = setup_exploration(strip_model(), ExplorationSpec(explored=("x1", "x2"), epsilon=0.5))
    assert p.v_star == 1.0 and p.budget == 1.5
