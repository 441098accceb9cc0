from __future__ import annotations

from dataclasses import replace

import networkx as nx
import pytest

from sdn_planner.exceptions import NoPathError
from sdn_planner.kpaths import Path, PathPool, k_shortest_paths, build_pool
from sdn_planner.scenario import Node, NodeKind


def test_toy_pool(toy_scenario):
    pool = build_pool(toy_scenario)
    assert len(pool) == 8
    assert [str(p) for p in pool.for_pair('G1', 'H1')] == ['G1-S1-H1', 'G1-S2-H1']
    assert [p.id for p in pool] == list(range(8))
    assert all(p.length == 2 for p in pool)
    assert pool.through_node('G1') == frozenset(range(8))
    assert pool.through_edge('S1', 'H1') == pool.through_edge('H1', 'S1') == frozenset((0,))
    assert pool.touching(['H1', 'H2']) == frozenset((0, 1, 2, 3))


def test_k_paths_are_ordered_by_cost_then_nodes():
    graph = nx.Graph()
    graph.add_edge('a', 'b', weight=1)
    graph.add_edge('b', 'd', weight=1)
    graph.add_edge('a', 'c', weight=1)
    graph.add_edge('c', 'd', weight=1)
    graph.add_edge('a', 'd', weight=5)
    paths = k_shortest_paths(graph, 'a', 'd', 3, start_id=4)
    assert [p.nodes for p in paths] == [('a', 'b', 'd'), ('a', 'c', 'd'), ('a', 'd')]
    assert [p.cost for p in paths] == [2, 2, 5]
    assert [p.id for p in paths] == [4, 5, 6]


def test_k_paths_ties_at_cutoff_are_resolved_lexicographically():
    graph = nx.Graph()
    for mid in ('z', 'm', 'b'):
        graph.add_edge('s', mid)
        graph.add_edge(mid, 't')
    assert [p.nodes for p in k_shortest_paths(graph, 's', 't', 2)] == [('s', 'b', 't'), ('s', 'm', 't')]


def test_k_paths_fewer_than_k():
    graph = nx.path_graph(['a', 'b', 'c'])
    paths = k_shortest_paths(graph, 'a', 'c', 10)
    assert [p.nodes for p in paths] == [('a', 'b', 'c')]


def test_k_paths_unreachable():
    graph = nx.Graph()
    graph.add_nodes_from(('a', 'b'))
    assert k_shortest_paths(graph, 'a', 'b', 2) == []


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        k_shortest_paths(nx.path_graph(2), 0, 1, 0)


def test_path_properties():
    path = Path(0, ('a', 'b', 'c'), 2.0)
    assert (path.src, path.dst, path.length) == ('a', 'c', 2)
    assert path.edges == (frozenset('ab'), frozenset('bc'))
    assert path.rank('a') == 0
    assert path.rank('c') == 2
    assert path.next_hop('b') == 'c'
    assert path.next_hop('c') is None
    assert str(path) == 'a-b-c'


def test_pool_dump():
    pool = PathPool([Path(0, ('a', 'b'), 1), Path(1, ('a', 'c', 'b'), 2)])
    assert pool.dump() == '0 a b len=1 a-b\n1 a b len=2 a-c-b\n'
    assert pool.by_pair == {('a', 'b'): (0, 1)}
    assert PathPool().dump() == ''


def test_pool_shares_paths_between_flows_with_the_same_endpoints(line_scenario):
    scenario = line_scenario(flows=[('a', 'c', 'A', 1), ('a', 'c', 'B', 1)])
    pool = build_pool(scenario)
    assert len(pool) == 1


def test_weighted_edges(line_scenario):
    scenario = line_scenario(extra_edges=[('a', 'c')])
    edges = tuple(replace(e, weight=5.0) if e.endpoints == frozenset('ac') else e for e in scenario.edges)
    paths = build_pool(replace(scenario, edges=edges)).for_pair('a', 'c')
    assert [p.nodes for p in paths] == [('a', 'b', 'c'), ('a', 'c')]
    assert [p.cost for p in paths] == [2, 5]


def test_no_path(line_scenario):
    scenario = line_scenario(flows=[('a', 'x', 'T', 1)])
    scenario = replace(scenario, nodes=(*scenario.nodes, Node('x', NodeKind.HOST)))
    with pytest.raises(NoPathError):
        build_pool(scenario)
