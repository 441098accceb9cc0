"""
Benchmark topology generators, scenario fixtures built on them, and DOT export.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from itertools import permutations
from typing import Collection, Iterable, Mapping

from .exceptions import TopologyError
from .scenario import Node, Edge, NodeKind, FlowSpec, RiskModel, SecurityCosts, Policy, Scenario
from .utils import render_template

__all__ = [
    'FatTreeSpec',
    'gen_fat_tree',
    'gen_toy',
    'export_dot',
    'build_annotations',
    'build_toy_scenario',
    'build_fat_tree_scenario',
    'HIGH_RISK',
    'RECOVERED',
    'FIREWALL',
]
log = logging.getLogger(__name__)

Topology = tuple[tuple[Node, ...], tuple[Edge, ...]]
Attrs = Mapping[str, str]

HIGH_RISK: Attrs = {'color': 'red'}
RECOVERED: Attrs = {'color': 'green'}
FIREWALL: Attrs = {'shape': 'box'}
_DEFAULT_NODE_ATTRS = {'color': 'black', 'shape': 'ellipse'}

SWITCH_MEM = 4.0
TOY_CAPACITY = 10.0


@dataclass(frozen=True)
class FatTreeSpec:
    order: int = 4
    gateways: int = 2
    hosts_per_edge: int = 2
    link_capacity: float = 20.0

    def __post_init__(self):
        if not isinstance(self.order, int) or self.order < 2 or self.order % 2:
            raise TopologyError(f'Invalid fat-tree order={self.order!r} - must be an even integer >= 2')
        for attr in ('gateways', 'hosts_per_edge'):
            if not isinstance(value := getattr(self, attr), int) or value < 1:
                raise TopologyError(f'Invalid fat-tree {attr}={value!r} - must be an integer >= 1')
        if not self.link_capacity > 0:
            raise TopologyError(f'Invalid fat-tree link_capacity={self.link_capacity!r} - must be > 0')

    @property
    def half(self) -> int:
        return self.order // 2


def gen_fat_tree(spec: FatTreeSpec) -> Topology:
    """
    Generate a fat-tree of the given order with gateways above the core layer.

    Core switch ``i * (k/2) + j`` connects to aggregate switch ``i`` in every pod, aggregate and edge switches within a
    pod are fully connected, and every gateway connects to every core switch.
    """
    half, cap = spec.half, spec.link_capacity
    nodes: list[Node] = []
    edges: list[Edge] = []

    gateways = [f'gw{i}' for i in range(spec.gateways)]
    cores = [f'core{i}' for i in range(half * half)]
    nodes.extend(Node(gw, NodeKind.GATEWAY, SWITCH_MEM) for gw in gateways)
    nodes.extend(Node(core, NodeKind.SWITCH, SWITCH_MEM) for core in cores)
    edges.extend(Edge(gw, core, cap) for gw in gateways for core in cores)

    for pod in range(spec.order):
        aggs = [f'agg{pod}_{i}' for i in range(half)]
        edge_switches = [f'edge{pod}_{i}' for i in range(half)]
        nodes.extend(Node(sw, NodeKind.SWITCH, SWITCH_MEM) for sw in (*aggs, *edge_switches))
        for i, agg in enumerate(aggs):
            edges.extend(Edge(cores[i * half + j], agg, cap) for j in range(half))
            edges.extend(Edge(agg, edge_sw, cap) for edge_sw in edge_switches)
        for e, edge_sw in enumerate(edge_switches):
            hosts = [f'h{pod}_{e}_{j}' for j in range(spec.hosts_per_edge)]
            nodes.extend(Node(host, NodeKind.HOST) for host in hosts)
            edges.extend(Edge(edge_sw, host, cap) for host in hosts)

    log.debug(f'Generated order-{spec.order} fat-tree with {len(nodes)} nodes and {len(edges)} edges')
    return tuple(nodes), tuple(edges)


def gen_toy(capacity: float = TOY_CAPACITY) -> Topology:
    """One gateway, two switches, and four hosts, with both switches physically connected to every host"""
    hosts = [f'H{i}' for i in range(1, 5)]
    nodes = (
        Node('G1', NodeKind.GATEWAY, 0.0),
        Node('S1', NodeKind.SWITCH, SWITCH_MEM),
        Node('S2', NodeKind.SWITCH, SWITCH_MEM),
        *(Node(host, NodeKind.HOST) for host in hosts),
    )
    edges = (
        Edge('G1', 'S1', capacity),
        Edge('G1', 'S2', capacity),
        *(Edge(sw, host, capacity) for sw in ('S1', 'S2') for host in hosts),
    )
    return nodes, edges


# region DOT Export


def build_annotations(
    high_risk: Iterable[str] = (), recovered: Iterable[str] = (), firewalls: Iterable[str] = ()
) -> dict[str, dict[str, str]]:
    annotations: dict[str, dict[str, str]] = {}
    for nodes, attrs in ((high_risk, HIGH_RISK), (recovered, RECOVERED), (firewalls, FIREWALL)):
        for node in nodes:
            annotations.setdefault(node, {}).update(attrs)
    return annotations


def export_dot(
    nodes: Iterable[Node],
    edges: Iterable[Edge],
    annotations: Mapping[str, Attrs] | None = None,
    edge_annotations: Mapping[frozenset[str], Attrs] | None = None,
    name: str = 'network',
) -> str:
    """
    Render the given topology as a DOT digraph.  Physical links are undirected, so edges are drawn with ``dir=none``.

    :param nodes: The nodes to render
    :param edges: The physical links between them
    :param annotations: Mapping of node id to extra DOT attributes (see :func:`build_annotations`)
    :param edge_annotations: Mapping of edge endpoints to extra DOT attributes
    :param name: The graph name
    :return: DOT text
    """
    annotations = annotations or {}
    edge_annotations = edge_annotations or {}
    node_stmts = []
    for node in nodes:
        attrs = {**_DEFAULT_NODE_ATTRS, **annotations.get(node.id, {}), 'label': node.id}
        node_stmts.append((node.id, attrs))
    edge_stmts = []
    for edge in edges:
        attrs = {'dir': 'none', **edge_annotations.get(edge.endpoints, {})}
        edge_stmts.append((edge.u, edge.v, attrs))
    return render_template('topology.dot.j2', name=name, node_stmts=node_stmts, edge_stmts=edge_stmts)


# endregion

# region Scenario Fixtures


def _default_costs() -> SecurityCosts:
    return SecurityCosts(fw_cost={'web': 1.0, '*': 2.0}, pi_cost=1.0, fw_comp=3.0, pi_comp=2.0)


def build_toy_scenario(h1_risk: float = 10.0, paths_per_pair: int = 2) -> Scenario:
    """
    The DDoS walkthrough: the gateway G1 serves ``web`` traffic to each of H1..H4, and the service on H1 is under
    attack, which raises its risk.  Setting ``h1_risk=1`` produces the recovered (attack-free) variant.
    """
    nodes, edges = gen_toy()
    flows = tuple(FlowSpec('G1', f'H{i}', 'web', 1.0) for i in range(1, 5))
    risk = {('H1', 'web'): float(h1_risk)}
    return Scenario(
        nodes=nodes,
        edges=edges,
        traffic_types=('web',),
        flows=flows,
        risk=RiskModel(risk, radius=1),
        costs=_default_costs(),
        paths_per_pair=paths_per_pair,
    )


def build_fat_tree_scenario(
    spec: FatTreeSpec = FatTreeSpec(),
    flows: int = 60,
    external: int = 16,
    high_risk: int = 2,
    seed: int = 7,
    paths_per_pair: int = 10,
    high_risk_value: float = 10.0,
    demand: float = 1.0,
    radius: int = 1,
) -> Scenario:
    """
    The data-center experiment: two traffic types ``A`` and ``B``; half of the hosts may communicate with external
    sources, each through a single gateway; every host takes part in internal communication; all demands are equal;
    the ``high_risk`` attacked hosts have elevated risk for every traffic type.

    With ``radius=1``, hosts only neighbor their edge switch and gateways only neighbor core switches, so a flow's
    risk reaches ``high_risk_value**2`` (the low-risk threshold) exactly when an attacked host is one of its endpoints.
    Larger radii also mark flows that merely share an edge switch with an attacked host as high risk.

    The result is a pure function of the arguments (flow selection uses a private seeded RNG).
    """
    if not 0 <= external <= flows:
        raise TopologyError(f'Invalid external={external} - must be between 0 and flows={flows}')
    nodes, edges = gen_fat_tree(spec)
    rng = random.Random(seed)
    types = ('A', 'B')
    hosts = [node.id for node in nodes if node.kind == NodeKind.HOST]
    gateways = [node.id for node in nodes if node.kind == NodeKind.GATEWAY]

    permitted = sorted(rng.sample(hosts, len(hosts) // 2))
    host_gateway = {host: gateways[i % len(gateways)] for i, host in enumerate(permitted)}
    if external > len(permitted) * len(types):
        raise TopologyError(f'Unable to generate {external} distinct external flows with {len(permitted)} hosts')
    internal = flows - external
    if internal > len(hosts) * (len(hosts) - 1) * len(types):
        raise TopologyError(f'Unable to generate {internal} distinct internal flows with {len(hosts)} hosts')

    keys: dict[tuple[str, str, str], None] = {}
    while len(keys) < external:
        host = rng.choice(permitted)
        keys.setdefault((host_gateway[host], host, rng.choice(types)))

    internal_keys = _internal_flow_keys(rng, hosts, types, internal)
    flow_specs = tuple(FlowSpec(s, t, ttype, demand) for s, t, ttype in (*keys, *internal_keys))

    attacked = sorted(rng.sample(permitted, min(high_risk, len(permitted))))
    risk = {(host, ttype): high_risk_value for host in attacked for ttype in types}
    log.debug(f'Generated fat-tree scenario with {len(flow_specs)} flows; high risk hosts={attacked}')
    return Scenario(
        nodes=nodes,
        edges=edges,
        traffic_types=types,
        flows=flow_specs,
        risk=RiskModel(risk, radius),
        costs=SecurityCosts(fw_cost={'A': 1.0, 'B': 1.0}, pi_cost=1.0, fw_comp=3.0, pi_comp=2.0),
        paths_per_pair=paths_per_pair,
        policy=Policy(low_risk_threshold=high_risk_value**2),
    )


def _internal_flow_keys(
    rng: random.Random, hosts: Collection[str], types: tuple[str, ...], count: int
) -> list[tuple[str, str, str]]:
    keys: dict[tuple[str, str, str], None] = {}
    # Every host takes part in at least one internal flow
    order = list(hosts)
    rng.shuffle(order)
    for src, dst in zip(order, order[1:] + order[:1]):
        if len(keys) >= count:
            break
        keys.setdefault((src, dst, rng.choice(types)))

    pairs = list(permutations(hosts, 2))
    while len(keys) < count:
        src, dst = rng.choice(pairs)
        keys.setdefault((src, dst, rng.choice(types)))
    return list(keys)


# endregion
