from __future__ import annotations

import random
from collections import deque
from dataclasses import replace

import networkx as nx
import pytest

from sdn_planner.kpaths import Path, build_pool
from sdn_planner.risk import logical_topology, d_k, flow_risk, compute_risks, network_risk
from sdn_planner.scenario import FlowSpec
from sdn_planner.topology import build_fat_tree_scenario


def _toy_paths(pool, switches: dict[str, str]) -> dict[FlowSpec, Path]:
    paths = {}
    for host in ('H1', 'H2', 'H3', 'H4'):
        flow = FlowSpec('G1', host, 'web', 1.0)
        paths[flow] = next(p for p in pool.for_pair('G1', host) if p.nodes[1] == switches[host])
    return paths


def _neighborhood(adjacent: dict[str, set[str]], node: str, k: int) -> set[str]:
    seen = {node}
    queue = deque([(node, 0)])
    while queue:
        current, dist = queue.popleft()
        if dist == k:
            continue
        for neighbor in adjacent.get(current, ()):
            if neighbor not in seen:
                seen.add(neighbor)
                queue.append((neighbor, dist + 1))
    return seen


def test_logical_topology():
    paths = [Path(0, ('a', 'b', 'c'), 2), Path(1, ('c', 'd'), 1)]
    topology = logical_topology(paths)
    assert set(topology.nodes) == {'a', 'b', 'c', 'd'}
    assert {frozenset(e) for e in topology.edges} == {frozenset('ab'), frozenset('bc'), frozenset('cd')}


def test_d_k():
    topology = nx.path_graph(['a', 'b', 'c', 'd'])
    assert d_k(topology, 'a', 0) == {'a'}
    assert d_k(topology, 'a', 2) == {'a', 'b', 'c'}
    assert d_k(topology, 'x', 3) == {'x'}
    with pytest.raises(ValueError):
        d_k(topology, 'a', -1)


def test_toy_risk_with_shared_switch(toy_scenario):
    pool = build_pool(toy_scenario)
    paths = _toy_paths(pool, {'H1': 'S1', 'H2': 'S1', 'H3': 'S2', 'H4': 'S2'})
    risks = compute_risks(toy_scenario, paths)
    values = {flow.dst: value for flow, value in risks.values.items()}
    # radius 1 from G1 reaches both switches; H1 contributes 10**2
    assert values == {'H1': 103, 'H2': 4, 'H3': 4, 'H4': 4}
    assert risks.total == 115
    assert risks.max == 103


def test_toy_risk_without_attack(recovered_toy_scenario):
    pool = build_pool(recovered_toy_scenario)
    paths = _toy_paths(pool, {'H1': 'S1', 'H2': 'S1', 'H3': 'S2', 'H4': 'S2'})
    assert set(compute_risks(recovered_toy_scenario, paths).values.values()) == {4}


def test_larger_radius_reaches_lateral_hosts(toy_scenario):
    pool = build_pool(toy_scenario)
    paths = _toy_paths(pool, {'H1': 'S1', 'H2': 'S1', 'H3': 'S2', 'H4': 'S2'})
    scenario = replace(toy_scenario, risk=replace(toy_scenario.risk, radius=2))
    values = {flow.dst: value for flow, value in compute_risks(scenario, paths).values.items()}
    # G1 now reaches every host within 2 hops, including H1
    assert values == {'H1': 106, 'H2': 106, 'H3': 106, 'H4': 106}


def test_report(toy_scenario):
    pool = build_pool(toy_scenario)
    paths = _toy_paths(pool, {'H1': 'S1', 'H2': 'S1', 'H3': 'S2', 'H4': 'S2'})
    lines = compute_risks(toy_scenario, paths).report().splitlines()
    assert lines[0] == 'risk G1 H1 web path=G1-S1-H1 value=103'
    assert lines[-1] == 'network_risk 115'


def test_custom_risk_function(toy_scenario):
    pool = build_pool(toy_scenario)
    paths = _toy_paths(pool, {'H1': 'S1', 'H2': 'S1', 'H3': 'S2', 'H4': 'S2'})
    risks = compute_risks(toy_scenario, paths, lambda scenario, topology, path, ttype: float(path.length))
    assert set(risks.values.values()) == {2.0}
    with pytest.raises(ValueError):
        compute_risks(toy_scenario, paths, lambda *args: -1.0)


def test_network_risk():
    assert network_risk([1.0, 2.5]) == 3.5
    assert network_risk({}) == 0


def test_flow_risk_matches_brute_force():
    scenario = build_fat_tree_scenario(flows=30, external=8, seed=11, paths_per_pair=3, radius=2)
    scenario = scenario.with_risk({(host, 'B'): 1.0 + i % 4 for i, host in enumerate(scenario.hosts)})
    pool = build_pool(scenario)
    rng = random.Random(5)
    paths = list(pool)
    for _ in range(100):
        active = rng.sample(paths, 12)
        topology = logical_topology(active)
        adjacent: dict[str, set[str]] = {}
        for path in active:
            for u, v in zip(path.nodes, path.nodes[1:]):
                adjacent.setdefault(u, set()).add(v)
                adjacent.setdefault(v, set()).add(u)

        path = rng.choice(active)
        ttype = rng.choice(scenario.traffic_types)
        radius = scenario.risk.radius
        covered = _neighborhood(adjacent, path.src, radius) | _neighborhood(adjacent, path.dst, radius)
        covered |= set(path.nodes)
        expected = sum(scenario.risk_of(node, ttype) ** 2 for node in covered)
        assert flow_risk(scenario, topology, path, ttype) == pytest.approx(expected)
