import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfree import DomainError, MetricGraph, PreconditionError
from lipfree.metric_graph import (
    clearance_radii,
    distance,
    geodesic,
    path_intersection,
    path_length,
    path_point,
    reverse_path,
    split_path,
)
from lipfree.sampling import random_graph, random_point

from oracles import brute_force_vertex_distance, subdivided_distances


def test_unit_edge_endpoints(interval):
    assert distance(interval, interval.vertex("0"), interval.vertex("1")) == 1.0


def test_distance_to_self_is_zero(interval):
    p = interval.point_on_edge(0, 0.3)
    assert distance(interval, p, p) == 0.0


def test_c4_opposite_vertices(c4):
    expected = brute_force_vertex_distance(c4.vertices, [(e.u, e.v, e.length) for e in c4.edges], "0", "2")
    assert expected == 2.0
    assert distance(c4, c4.vertex("0"), c4.vertex("2")) == expected


def test_interior_points_same_edge_can_go_around(c4):
    # on edge 0-1, offsets 0.1 and 0.9: direct 0.8 beats 0.1 + 3 + 0.1
    a, b = c4.point_on_edge(0, 0.1), c4.point_on_edge(0, 0.9)
    assert distance(c4, a, b) == pytest.approx(0.8)
    G = MetricGraph(["0", "1"], [("0", "1", 10.0), ("0", "1", 1.0)])
    a, b = G.point_on_edge(0, 0.5), G.point_on_edge(0, 9.5)
    assert distance(G, a, b) == pytest.approx(2.0)


def test_point_on_edge_snaps_to_vertices(interval):
    assert interval.point_on_edge(0, 0.0) == interval.vertex("0")
    assert interval.point_on_edge(0, 1.0 - 1e-12) == interval.vertex("1")


def test_rejects_bad_graphs():
    with pytest.raises(DomainError):
        MetricGraph(["0", "1"], [("0", "1", 0.0)])
    with pytest.raises(DomainError):
        MetricGraph(["0", "1", "2"], [("0", "1", 1.0)])
    with pytest.raises(DomainError):
        MetricGraph(["0"], [("0", "0", 1.0)])


def test_rejects_points_off_the_graph(interval):
    with pytest.raises(DomainError):
        interval.parse_point("e:0:1.5")
    with pytest.raises(DomainError):
        interval.parse_point("v:7")


def test_parse_roundtrip(c4):
    for text in ["v:2", "e:1:0.25"]:
        assert str(c4.parse_point(text)) == text


def test_geodesic_single_edge(interval):
    g = geodesic(interval, interval.vertex("0"), interval.vertex("1"))
    assert g.length == 1.0
    assert g.pieces() == [(0, 0.0, 1.0)]


def test_geodesic_path_graph(path3):
    g = geodesic(path3, path3.vertex("0"), path3.vertex("2"))
    assert path_length(g) == 2.0
    assert "1" in g.vertex_set()


def test_geodesic_c4_adjacent_uses_shared_edge(c4):
    g = geodesic(c4, c4.vertex("0"), c4.vertex("1"))
    detour = geodesic(c4, c4.vertex("0"), c4.vertex("3")).length + 2.0
    assert g.length == 1.0 < detour == 3.0


def test_geodesic_tie_break_is_lexicographic(c4):
    # both routes 0-1-2 and 0-3-2 have length 2; the smaller vertex sequence wins
    g = geodesic(c4, c4.vertex("0"), c4.vertex("2"))
    assert g.vertex_set() == {"0", "1", "2"}


def test_three_edge_detour_length(c4):
    G = c4
    from lipfree.metric_graph import GraphPath

    detour = GraphPath(G, [(3, 0.0, 1.0), (2, 1.0, 0.0), (1, 1.0, 0.0)], G.vertex("0"), G.vertex("1"))
    assert path_length(detour) == 3.0


def test_path_point_endpoints_and_midpoint(interval):
    g = geodesic(interval, interval.vertex("0"), interval.vertex("1"))
    assert path_point(g, 0.0) == interval.vertex("0")
    assert path_point(g, 1.0) == interval.vertex("1")
    mid = path_point(g, 0.5)
    assert mid.edge == 0 and mid.offset == 0.5


def test_split_path_examples(interval):
    g = geodesic(interval, interval.vertex("0"), interval.vertex("1"))
    assert split_path(g, []) == [g]
    halves = split_path(g, [0.5])
    assert [h.length for h in halves] == [0.5, 0.5]
    with pytest.raises(DomainError):
        split_path(g, [0.7, 0.2])


def test_reverse_path(c4):
    g = geodesic(c4, c4.vertex("0"), c4.point_on_edge(1, 0.5))
    r = reverse_path(g)
    assert (r.start, r.end) == (g.end, g.start)
    assert r.length == g.length
    assert reverse_path(r) == g


def test_path_intersection_examples(star4):
    G = star4
    n, s, e = G.vertex("n"), G.vertex("s"), G.vertex("e")
    g1 = geodesic(G, n, G.vertex("c"))
    g2 = geodesic(G, G.vertex("c"), e)
    assert path_intersection(g1, g2) == [(1.0, 1.0)]
    assert path_intersection(g1, g1) == [(0.0, 1.0)]
    g3 = geodesic(G, s, G.point_on_edge(2, 0.5))
    assert path_intersection(geodesic(G, n, G.point_on_edge(0, 0.5)), g3) == []


def test_clearance_single_unit_path(interval):
    g = geodesic(interval, interval.vertex("0"), interval.vertex("1"))
    R, r = clearance_radii(interval, [g])
    assert R == 0.25
    assert r == R / 2


def test_clearance_shared_endpoint_is_exempt(star4):
    G = star4
    g1 = geodesic(G, G.vertex("n"), G.vertex("c"))
    g2 = geodesic(G, G.vertex("c"), G.vertex("e"))
    R, r = clearance_radii(G, [g1, g2])
    # endpoint distances are 1 and 2; neither path's own endpoints constrain it
    assert R == 0.25
    assert 0 < r < R


def test_clearance_rejects_overlapping_paths(path3):
    G = path3
    g1 = geodesic(G, G.vertex("0"), G.vertex("2"))
    g2 = geodesic(G, G.vertex("0"), G.vertex("1"))
    with pytest.raises(PreconditionError):
        clearance_radii(G, [g1, g2])


def test_clearance_balls_are_separated(star4):
    G = star4
    g1 = geodesic(G, G.vertex("n"), G.vertex("s"))
    g2 = geodesic(G, G.vertex("e"), G.point_on_edge(1, 0.5))
    R, r = clearance_radii(G, [g1, g2])
    # strict versions of the clearance conditions, sampled along both paths
    for p in (g1.start, g1.end):
        for t in np.linspace(0, 1, 41):
            assert distance(G, p, g2.point_at(t)) > R
    assert r < R


# property tests --------------------------------------------------------

graphs = st.integers(0, 2**32 - 1).map(lambda s: np.random.default_rng(s))


@settings(max_examples=40, deadline=None)
@given(graphs)
def test_distance_matches_subdivision_oracle(rng):
    G = random_graph(rng, max_vertices=6, extra_edges=3)
    pts = [random_point(G, rng) for _ in range(4)]
    oracle = subdivided_distances(G, pts)
    for p in pts:
        for q in pts:
            assert distance(G, p, q) == pytest.approx(oracle(p, q), abs=1e-9)
    D = G.distance_matrix(pts)
    assert np.allclose(D, D.T) and np.allclose(D, [[oracle(p, q) for q in pts] for p in pts])


@settings(max_examples=40, deadline=None)
@given(graphs)
def test_geodesic_length_and_split_lengths(rng):
    G = random_graph(rng, max_vertices=6, extra_edges=3)
    p, q = random_point(G, rng), random_point(G, rng)
    if p == q:
        return
    g = geodesic(G, p, q)
    assert g.start == p and g.end == q
    assert g.length == pytest.approx(distance(G, p, q), abs=1e-9)
    assert g.is_simple()
    params = sorted(rng.uniform(0, 1, 3).tolist())
    pieces = split_path(g, params)
    assert sum(piece.length for piece in pieces) == pytest.approx(g.length, abs=1e-9)
    for t in params:
        x = path_point(g, t)
        assert distance(G, p, x) == pytest.approx(t * g.length, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(graphs)
def test_params_at_distance_solves_level_sets(rng):
    G = random_graph(rng, max_vertices=6, extra_edges=3)
    p, q = random_point(G, rng), random_point(G, rng)
    if p == q:
        return
    g = geodesic(G, p, q)
    c = random_point(G, rng)
    lo, hi = sorted((distance(G, c, p), distance(G, c, q)))
    target = float(rng.uniform(lo, hi))
    t = g.params_at_distance(c, target, last=True)
    assert t is not None
    assert distance(G, c, g.point_at(t)) == pytest.approx(target, abs=1e-9)
    # t is the last crossing, so the sign of d - target is constant afterwards
    later = [distance(G, c, g.point_at(s)) - target for s in np.linspace(t, 1, 50)[1:] if s - t > 1e-6]
    signs = {np.sign(v) for v in later if abs(v) > 1e-9}
    assert len(signs) <= 1


def test_graph_dict_roundtrip(c4):
    G2 = MetricGraph.from_dict(c4.to_dict())
    assert G2.to_dict() == c4.to_dict()
    assert np.array_equal(G2.vdist, c4.vdist)
