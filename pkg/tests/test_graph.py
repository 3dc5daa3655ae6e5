import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roadkit.graph import (
    GraphBuilder,
    GraphParseError,
    GraphSchemaError,
    Window,
    crop_graph,
    node_degrees,
    parse_graph,
    serialize_graph,
)


def test_parse_empty_graph():
    g = parse_graph('{"nodes":[],"edges":[]}')
    assert len(g.nodes) == 0
    assert len(g.edges) == 0


def test_parse_single_segment():
    g = parse_graph('{"nodes":[[0,0],[10,0]],"edges":[{"a":0,"b":1}]}')
    assert len(g.nodes) == 2
    assert len(g.edges) == 1
    assert sorted(node_degrees(g).values()) == [1, 1]


def test_parse_merges_shared_junction():
    # Two linestrings split at (5,5), junction coordinate repeated per piece.
    doc = {
        "nodes": [[0, 5], [5, 5], [10, 5], [5, 0], [5, 5], [5, 10]],
        "edges": [
            {"a": 0, "b": 1},
            {"a": 1, "b": 2},
            {"a": 3, "b": 4},
            {"a": 4, "b": 5},
        ],
    }
    g = parse_graph(json.dumps(doc))
    assert len(g.nodes) == 5
    center = g.nodes.index((5.0, 5.0))
    assert node_degrees(g)[center] == 4


def test_parse_malformed_document():
    with pytest.raises(GraphParseError):
        parse_graph("{not json")


def test_parse_dangling_reference():
    with pytest.raises(GraphSchemaError):
        parse_graph('{"nodes":[[0,0]],"edges":[{"a":0,"b":7}]}')


def test_degrees_path_graph():
    g = parse_graph('{"nodes":[[0,0],[5,0],[10,0]],"edges":[{"a":0,"b":1},{"a":1,"b":2}]}')
    assert sorted(node_degrees(g).values()) == [1, 1, 2]


def test_degree_t_junction_and_crossroad():
    b = GraphBuilder()
    for seg in ([(0, 0), (5, 0)], [(5, 0), (10, 0)], [(5, 0), (5, 5)]):
        b.add_polyline(seg)
    t = b.build()
    center = t.nodes.index((5.0, 0.0))
    assert node_degrees(t)[center] == 3

    b = GraphBuilder()
    for seg in ([(0, 5), (5, 5)], [(5, 5), (10, 5)], [(5, 0), (5, 5)], [(5, 5), (5, 10)]):
        b.add_polyline(seg)
    x = b.build()
    center = x.nodes.index((5.0, 5.0))
    assert node_degrees(x)[center] == 4


def test_self_loop_counts_twice():
    b = GraphBuilder()
    b.add_polyline([(0, 0), (5, 0), (5, 5), (0, 0)])
    g = b.build()
    assert node_degrees(g)[0] == 2


def test_crop_identity_when_inside():
    g = parse_graph('{"nodes":[[2,2],[8,8]],"edges":[{"a":0,"b":1}]}')
    c = crop_graph(g, Window(0, 0, 10, 10))
    assert len(c.nodes) == 2
    assert len(c.edges) == 1
    assert not c.boundary_nodes


def test_crop_clips_crossing_segment():
    g = parse_graph('{"nodes":[[-5,5],[15,5]],"edges":[{"a":0,"b":1}]}')
    c = crop_graph(g, Window(0, 0, 10, 10))
    assert sorted(c.nodes) == [(0.0, 5.0), (10.0, 5.0)]
    assert c.boundary_nodes == {0, 1}
    assert len(c.edges) == 1


def test_crop_disjoint_segment():
    g = parse_graph('{"nodes":[[20,20],[30,30]],"edges":[{"a":0,"b":1}]}')
    c = crop_graph(g, Window(0, 0, 10, 10))
    assert len(c.edges) == 0


def test_crop_interior_junction_keeps_degree():
    b = GraphBuilder()
    for seg in ([(-5, 5), (5, 5)], [(5, 5), (20, 5)], [(5, 5), (5, 8)]):
        b.add_polyline(seg)
    g = b.build()
    c = crop_graph(g, Window(0, 0, 10, 10))
    center = c.nodes.index((5.0, 5.0))
    assert node_degrees(c)[center] == 3
    assert center not in c.boundary_nodes
    cut_nodes = {c.nodes[i] for i in c.boundary_nodes}
    assert cut_nodes == {(0.0, 5.0), (10.0, 5.0)}


def test_serialize_empty():
    g = parse_graph('{"nodes":[],"edges":[]}')
    assert json.loads(serialize_graph(g)) == {"nodes": [], "edges": []}


def test_window_must_be_positive():
    with pytest.raises(ValueError):
        Window(0, 0, 0, 10)


coordinate = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)
point = st.tuples(coordinate, coordinate)
segment = st.tuples(point, point).filter(lambda s: math.dist(s[0], s[1]) > 1e-3)


@st.composite
def graphs(draw):
    segs = draw(st.lists(segment, min_size=0, max_size=8))
    b = GraphBuilder()
    for p, q in segs:
        b.add_polyline([p, q])
    return b.build()


@given(graphs())
@settings(max_examples=60)
def test_round_trip_preserves_structure(g):
    h = parse_graph(serialize_graph(g))
    assert len(h.nodes) == len(g.nodes)
    assert len(h.edges) == len(g.edges)
    assert sorted(node_degrees(h).values()) == sorted(node_degrees(g).values())


@given(graphs())
@settings(max_examples=60)
def test_handshake_lemma(g):
    assert sum(node_degrees(g).values()) == 2 * len(g.edges)


@given(graphs())
@settings(max_examples=60)
def test_crop_with_covering_window_is_identity(g):
    box = g.bounding_box()
    if box is None:
        return
    w = Window(box[0] - 1, box[1] - 1, box[2] - box[0] + 2, box[3] - box[1] + 2)
    c = crop_graph(g, w)
    assert len(c.edges) == len(g.edges)
    assert not c.boundary_nodes
