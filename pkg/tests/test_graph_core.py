import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from joinpot.graph_core import (
    Ambient,
    EdgeIndex,
    PatternGraph,
    boundary_size,
    build_complete_binary_tree,
    build_path,
    decompose_components,
    max_complete_height,
    parse_graph_spec,
    restrict_away,
    subtree,
    tree_depth,
    tree_depth_bruteforce,
)

T3_EDGES = sorted(build_complete_binary_tree(3).edges)
P8_EDGES = sorted(build_path(8).edges)


def edge_subsets(edges, max_size=None):
    return st.lists(st.sampled_from(edges), unique=True, max_size=max_size or len(edges))


def test_complete_tree_sizes():
    for k in range(1, 5):
        T = build_complete_binary_tree(k)
        assert len(T.vertices) == 2 ** (k + 1) - 1
        assert len(T.edges) == 2 ** (k + 1) - 2


def test_tree_depth_edge_height_convention():
    # a single edge has depth 1, a single vertex depth 0
    assert tree_depth(build_path(1)) == 1
    for k in range(1, 5):
        assert tree_depth(build_complete_binary_tree(k), cap=31) == k


@pytest.mark.parametrize("k", range(1, 9))
def test_path_tree_depth_closed_form(k):
    # vertex-count tree-depth of a path on m vertices is ceil(log2(m + 1))
    assert tree_depth(build_path(k)) == math.ceil(math.log2(k + 2)) - 1


@settings(max_examples=60, deadline=None)
@given(edge_subsets(T3_EDGES, 9))
def test_tree_depth_matches_bruteforce_on_tree_subgraphs(edges):
    F = PatternGraph(Ambient.TINF, frozenset(edges))
    assert tree_depth(F) == tree_depth_bruteforce(F)


@settings(max_examples=60, deadline=None)
@given(edge_subsets(P8_EDGES))
def test_tree_depth_is_max_over_components(edges):
    F = PatternGraph(Ambient.PINF, frozenset(edges))
    comps = F.components()
    assert tree_depth(F) == max((tree_depth(c) for c in comps), default=0)


@settings(max_examples=80, deadline=None)
@given(edge_subsets(T3_EDGES))
def test_edge_index_components_agree_with_graph(edges):
    T = build_complete_binary_tree(3)
    idx = EdgeIndex(T)
    F = PatternGraph(Ambient.TINF, frozenset(edges))
    m = idx.mask(F)
    assert idx.graph(m) == F
    masks = sorted(idx.components(m))
    assert masks == sorted(idx.mask(c) for c in F.components())
    assert idx.is_connected(m) == F.is_connected()
    assert idx.boundary_size(m) == boundary_size(F)


def test_subtree_boundary_and_height():
    for j in range(1, 5):
        Tx = subtree((j, 0))
        assert boundary_size(Tx) == 1
        assert max_complete_height(Tx) == j


@settings(max_examples=80, deadline=None)
@given(edge_subsets(P8_EDGES), st.sets(st.integers(0, 8)))
def test_restrict_away_keeps_exactly_the_disjoint_components(edges, S):
    F = PatternGraph(Ambient.PINF, frozenset(edges))
    R = restrict_away(F, S)
    assert R.issubgraph(F)
    for comp in F.components():
        kept = comp.edges <= R.edges
        assert kept == comp.vertices.isdisjoint(S)


@settings(max_examples=80, deadline=None)
@given(edge_subsets(P8_EDGES), st.sets(st.integers(0, 8)))
def test_decompose_components_partitions_edges(edges, S):
    F = PatternGraph(Ambient.PINF, frozenset(edges))
    parts = decompose_components(F, S)
    union = frozenset().union(*(p.edges for p in parts)) if parts else frozenset()
    assert union == F.edges
    assert sum(p.length for p in parts) == len(F.edges)
    for p in parts:
        assert not any(v in S for v in range(p.left + 1, p.right))
        assert p.vertex_set.isdisjoint(S)


def test_component_notation():
    F = build_path(4)
    parts = decompose_components(F, {2})
    assert [p.notation() for p in parts] == ["[0,2)", "(2,4]"]
    assert [p.kind for p in parts] == ["half-open", "half-open"]
    assert [p.kind for p in decompose_components(F, {0, 4})] == ["open"]
    assert [p.kind for p in decompose_components(F, set())] == ["closed"]


def test_graph_spec_round_trip():
    for spec in ("T:2", "P:5"):
        G = parse_graph_spec(spec)
        assert PatternGraph.from_json(G.to_json()) == G


def test_isolated_vertices_need_flag():
    with pytest.raises(ValueError):
        PatternGraph(Ambient.PINF, frozenset(), frozenset({3}))
    G = PatternGraph(Ambient.PINF, frozenset(), frozenset({3}), True)
    assert G.vertices == frozenset({3})
