"""Builders, graph invariants, boundary windows, and the graph file format."""
import json
from fractions import Fraction

import numpy as np
import pytest

from zeroising.exact import Rotation, qs, vec
from zeroising.plane_graph import (Boundary, GraphError, GraphFormatError,
                                   LineFamily, PlaneGraph, Window,
                                   build_class_H, build_lattice, read_graph,
                                   write_graph)


def test_square_3_by_3():
    w = build_lattice("square", 3, "free")
    assert w.n == 9
    degs = sorted(w.graph.degree(v) for v in range(9))
    assert degs == [2, 2, 2, 2, 3, 3, 3, 3, 4]
    center = w.graph.id_at(vec(0, 0))
    assert w.graph.degree(center) == 4


def test_extent_too_small():
    with pytest.raises(GraphError):
        build_lattice("square", 2, "free")
    with pytest.raises(GraphError):
        build_lattice("unknown_kind", 5, "free")


def test_hexagonal_interior_degree_three(hexagonal8):
    interior = hexagonal8.interior_ids(1)
    assert len(interior) > 20
    assert {hexagonal8.graph.degree(int(v)) for v in interior} == {3}
    assert hexagonal8.graph.max_degree == 3


def test_stripe_degrees():
    # oracle: the explicit edge set has vertical edges everywhere and
    # horizontal edges on the axis row only
    w = build_lattice("stripe_pi", 7, "free")
    g = w.graph
    assert g.degree(g.id_at(vec(0, 0))) == 4
    assert g.degree(g.id_at(vec(0, 2))) == 2
    # at extent 5 the vertex (0,2) is on the rim; its untruncated degree is
    # still recorded
    w5 = build_lattice("stripe_pi", 5, "free")
    assert w5.infinite_degree[w5.graph.id_at(vec(0, 2))] == 2
    assert int(w5.infinite_degree[w5.graph.id_at(vec(0, 0))]) == 4


def test_known_max_degrees(square21, triangular15, hexagonal8):
    assert square21.graph.max_degree == 4
    assert triangular15.graph.max_degree == 6
    assert hexagonal8.graph.max_degree == 3


def test_builders_validate_planarity():
    for kind, extent in (("square", 7), ("triangular", 7), ("hexagonal", 5),
                         ("double_triangular", 9),
                         ("modified_double_square", 9), ("stripe_pi", 7)):
        w = build_lattice(kind, extent, "free")
        w.graph.validate("full")  # raises on any embedding violation


def test_adjacency_symmetric(square9):
    g = square9.graph
    for u in range(g.n):
        for v in g.adjacency[u]:
            assert u in g.adjacency[v]


def test_degree_in_examples(square9, hexagonal8):
    g = square9.graph
    o = g.id_at(vec(0, 0))
    s = {g.id_at(vec(1, 0)), g.id_at(vec(0, 1))}
    assert g.degree_in(o, s) == 2
    assert g.degree_in(o, set()) == 0
    with pytest.raises((GraphError, KeyError)):
        g.degree_in(10_000, set())
    # a hexagon-cycle vertex sees two cycle neighbours
    from zeroising.shrink import search_frozen_set
    cyc = search_frozen_set(hexagonal8, 6).witness["set"]
    assert hexagonal8.graph.degree_in(cyc[0], set(cyc)) == 2


def test_external_boundary_examples(square9):
    g = square9.graph
    o = g.id_at(vec(0, 0))
    nb = g.external_boundary({o})
    assert nb == set(g.adjacency[o])
    assert len(nb) == 4
    assert g.external_boundary(set(range(g.n))) == set()
    block = {g.id_at(vec(x, y)) for x in (0, 1) for y in (0, 1)}
    assert len(g.external_boundary(block)) == 8
    assert g.external_boundary(block) & block == set()


def test_class_h_square_is_square_lattice():
    arr = build_class_H([LineFamily(vec(1, 0), 1, 0),
                         LineFamily(vec(0, 1), 1, 0)], 4)
    ref = build_lattice("square", 9, "free")
    assert {tuple(v.position) for v in arr.graph.vertices} == \
        {tuple(v.position) for v in ref.graph.vertices}
    assert len(arr.graph.edges) == len(ref.graph.edges)


def test_class_h_triangular_interior_degree_six():
    h = Fraction(1, 2)
    s = qs(0, h)  # sqrt(3)/2 spacing puts the three families through points
    arr = build_class_H([LineFamily(vec(1, 0), s, 0),
                         LineFamily(vec(h, s), s, 0),
                         LineFamily(vec(-h, s), s, 0)], 5)
    interior = arr.interior_ids(1)
    assert len(interior) > 10
    assert {arr.graph.degree(int(v)) for v in interior} == {6}


def test_class_h_needs_two_nonparallel_families():
    with pytest.raises(GraphError):
        build_class_H([LineFamily(vec(1, 0), 1, 0)], 5)
    with pytest.raises(GraphError):
        build_class_H([LineFamily(vec(1, 0), 1, 0),
                       LineFamily(vec(2, 0), 1, Fraction(1, 2))], 5)


def test_class_h_even_interior_degree():
    # concurrency of three families raises the degree but keeps it even
    h = Fraction(1, 2)
    arr = build_class_H([LineFamily(vec(1, 0), 2, 0),
                         LineFamily(vec(0, 1), 2, 0),
                         LineFamily(vec(1, 1), 2, 0)], 8)
    interior = arr.interior_ids(1)
    assert all(arr.graph.degree(int(v)) % 2 == 0 for v in interior)


def test_modified_double_square_matches_arrangement_oracle():
    # independent oracle: enumerate intersections of the offset pattern
    w = build_lattice("modified_double_square", 10, "free")
    offsets = sorted(o for o in range(-10, 11)
                     if o % 2 != 0 or o % 4 == 0)
    expected = {(x, y) for x in offsets for y in offsets}
    got = {(int(v.position.x.p), int(v.position.y.p)) for v in w.graph.vertices}
    assert got == expected


def test_periodic_windows_have_no_rim():
    for kind in ("square", "triangular", "hexagonal"):
        w = build_lattice(kind, 6, "periodic")
        assert len(w.rim_ids()) == 0
        degs = {len(w.neighbors(v)) for v in range(w.n)}
        assert degs == {int(w.infinite_degree[0])}


def test_stripe_periodic_is_cylinder():
    w = build_lattice("stripe_pi", 6, "periodic")
    # axis row keeps degree 4 everywhere thanks to the x-wrap
    axis = [v for v in range(w.n) if w.graph.position(v).y == qs(0)]
    assert all(len(w.neighbors(v)) == 4 for v in axis)
    with pytest.raises(GraphError):
        build_lattice("stripe_pi", 6, Boundary.periodic([vec(0, 6)]))


def test_incompatible_periodic_rejected():
    with pytest.raises(GraphError):
        build_lattice("double_triangular", 9, "periodic")
    with pytest.raises(GraphError):
        build_lattice("modified_double_square", 9, "periodic")


def test_fixed_boundary_phantoms():
    w = build_lattice("square", 5, "fixed+")
    pf = w.phantom_field()
    g = w.graph
    assert pf[g.id_at(vec(0, 0))] == 0
    assert pf[g.id_at(vec(-2, -2))] == 2   # corner misses two neighbours
    assert pf[g.id_at(vec(0, -2))] == 1
    wm = build_lattice("square", 5, "fixed-")
    assert wm.phantom_field()[g.id_at(vec(-2, -2))] == -2


def test_interior_margin_by_graph_distance(square9):
    assert len(square9.interior_ids(0)) == 81
    assert len(square9.interior_ids(1)) == 49
    assert len(square9.interior_ids(2)) == 25


def test_window_margin_validation(square9):
    with pytest.raises(GraphError):
        Window(square9.graph, Boundary.free(), interior_margin=-1.0)


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def test_round_trip_bit_exact(tmp_path, square9):
    p = tmp_path / "g.json"
    write_graph(square9.graph, str(p))
    g2 = read_graph(str(p))
    assert {tuple(v.position) for v in g2.vertices} == \
        {tuple(v.position) for v in square9.graph.vertices}
    assert g2.edges == square9.graph.edges
    assert g2.declared_symmetry == square9.graph.declared_symmetry
    p2 = tmp_path / "g2.json"
    write_graph(g2, str(p2))
    assert p.read_bytes() == p2.read_bytes()


def test_round_trip_exact_coordinates(tmp_path):
    w = build_lattice("triangular", 5, "free")
    p = tmp_path / "tri.json"
    write_graph(w.graph, str(p))
    g2 = read_graph(str(p))
    for a, b in zip(w.graph.vertices, g2.vertices):
        assert a.position == b.position  # exact, including sqrt(3) parts


def test_duplicate_edge_rejected(tmp_path, square9):
    p = tmp_path / "bad.json"
    write_graph(square9.graph, str(p))
    doc = json.loads(p.read_text())
    doc["edges"].append(doc["edges"][0])
    p.write_text(json.dumps(doc))
    with pytest.raises(GraphFormatError, match="duplicated edge"):
        read_graph(str(p))


def test_crossing_edges_rejected(tmp_path):
    doc = {
        "format_version": 1,
        "vertices": [
            {"id": 0, "x": [0, 1, 0, 1], "y": [0, 1, 0, 1], "class": None},
            {"id": 1, "x": [2, 1, 0, 1], "y": [2, 1, 0, 1], "class": None},
            {"id": 2, "x": [2, 1, 0, 1], "y": [0, 1, 0, 1], "class": None},
            {"id": 3, "x": [0, 1, 0, 1], "y": [2, 1, 0, 1], "class": None},
        ],
        "edges": [[0, 1], [2, 3]],
        "symmetry": None,
    }
    p = tmp_path / "cross.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(GraphFormatError, match="interiors intersect"):
        read_graph(str(p))


def test_vertex_inside_edge_rejected(tmp_path):
    doc = {
        "format_version": 1,
        "vertices": [
            {"id": 0, "x": [0, 1, 0, 1], "y": [0, 1, 0, 1], "class": None},
            {"id": 1, "x": [2, 1, 0, 1], "y": [0, 1, 0, 1], "class": None},
            {"id": 2, "x": [1, 1, 0, 1], "y": [0, 1, 0, 1], "class": None},
        ],
        "edges": [[0, 1]],
        "symmetry": None,
    }
    p = tmp_path / "mid.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(GraphFormatError, match="interior of edge"):
        read_graph(str(p))


def test_bad_format_version(tmp_path):
    p = tmp_path / "v2.json"
    p.write_text(json.dumps({"format_version": 2, "vertices": [], "edges": []}))
    with pytest.raises(GraphFormatError, match="format_version"):
        read_graph(str(p))


def test_non_dense_ids_rejected(tmp_path):
    doc = {"format_version": 1,
           "vertices": [{"id": 1, "x": [0, 1, 0, 1], "y": [0, 1, 0, 1],
                         "class": None}],
           "edges": [], "symmetry": None}
    p = tmp_path / "ids.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(GraphFormatError, match="dense"):
        read_graph(str(p))


def test_duplicate_position_rejected():
    with pytest.raises(GraphError, match="duplicate vertex position"):
        g = PlaneGraph([vec(0, 0), vec(0, 0)], [])
        g.validate("basic")
