"""
Problem-instance domain types, scenario file ingestion, and validation.

A scenario is the complete input to the planner: the physical topology, the traffic types and demanded flows, the
per-device risk model, the costs of security devices, and the objective weights of both layers.

:author: Doug Skrypa
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterator, Mapping, Sequence

import networkx as nx
from ds_tools.caching.decorators import cached_property

from .exceptions import ScenarioSyntaxError, ScenarioSemanticError, RiskError
from .utils import WILDCARD

__all__ = [
    'NodeKind',
    'Node',
    'Edge',
    'FlowSpec',
    'RiskModel',
    'SecurityCosts',
    'Weights',
    'Policy',
    'Scenario',
    'Violation',
    'parse_scenario',
    'serialize_scenario',
    'validate_scenario',
    'build_graph',
]
log = logging.getLogger(__name__)

BASELINE_RISK = 1.0
DEFAULT_RADIUS = 2
DEFAULT_PATHS_PER_PAIR = 10
TOP_LEVEL_KEYS = (
    'nodes', 'edges', 'traffic_types', 'flows', 'risk', 'risk_radius', 'costs', 'weights', 'paths_per_pair', 'policy'
)
REQUIRED_KEYS = frozenset(('nodes', 'edges', 'traffic_types', 'flows'))


class NodeKind(str, Enum):
    HOST = 'host'
    SWITCH = 'switch'
    GATEWAY = 'gateway'


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    mem: float = 0.0


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    capacity: float
    weight: float = 1.0

    @property
    def endpoints(self) -> frozenset[str]:
        return frozenset((self.u, self.v))

    def __str__(self) -> str:
        return f'{self.u}--{self.v}'


@dataclass(frozen=True)
class FlowSpec:
    src: str
    dst: str
    ttype: str
    demand: float

    @property
    def key(self) -> tuple[str, str, str]:
        return self.src, self.dst, self.ttype

    @property
    def pair(self) -> tuple[str, str]:
        return self.src, self.dst

    def __str__(self) -> str:
        return f'{self.src}->{self.dst}[{self.ttype}]'


@dataclass(frozen=True)
class RiskModel:
    values: Mapping[tuple[str, str], float] = field(default_factory=dict)
    radius: int = DEFAULT_RADIUS

    def risk(self, node: str, ttype: str) -> float:
        if ttype == WILDCARD:
            raise RiskError(f'Risk is undefined for the wildcard traffic type (node={node})')
        return self.values.get((node, ttype), BASELINE_RISK)


@dataclass(frozen=True)
class SecurityCosts:
    fw_cost: Mapping[str, float] = field(default_factory=dict)
    pi_cost: float = 1.0
    fw_comp: float = 1.0
    pi_comp: float = 1.0
    penalty_scale: float | None = None


@dataclass(frozen=True)
class Weights:
    alpha: tuple[float, float, float] = (1.0, 10.0, 0.01)
    beta: tuple[float, float, float, float] = (1.0, 0.01, 1.0, 1.0)


@dataclass(frozen=True)
class Policy:
    """Result-analysis thresholds and placement options that a scenario may override"""

    low_risk_threshold: float | None = None
    high_risk_fraction: float = 0.8
    defend_hosts: bool = False


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    traffic_types: tuple[str, ...]
    flows: tuple[FlowSpec, ...]
    risk: RiskModel = field(default_factory=RiskModel)
    costs: SecurityCosts = field(default_factory=SecurityCosts)
    weights: Weights = field(default_factory=Weights)
    paths_per_pair: int = DEFAULT_PATHS_PER_PAIR
    policy: Policy = field(default_factory=Policy)

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {node.id: node for node in self.nodes}

    @cached_property
    def graph(self) -> nx.Graph:
        return build_graph(self.nodes, self.edges)

    @cached_property
    def edge_map(self) -> dict[frozenset[str], Edge]:
        return {edge.endpoints: edge for edge in self.edges}

    @cached_property
    def hosts(self) -> tuple[str, ...]:
        return tuple(node.id for node in self.nodes if node.kind == NodeKind.HOST)

    def edge(self, u: str, v: str) -> Edge:
        return self.edge_map[frozenset((u, v))]

    def fw_cost(self, ttype: str) -> float:
        try:
            return self.costs.fw_cost[ttype]
        except KeyError:
            pass
        if ttype == WILDCARD:
            return sum(self.fw_cost(t) for t in self.traffic_types)
        return 1.0

    def risk_of(self, node: str, ttype: str) -> float:
        if node not in self.node_map:
            raise RiskError(f'No risk entry for unknown node={node!r} type={ttype!r}')
        if ttype != WILDCARD and ttype not in self.traffic_types:
            raise RiskError(f'No risk entry for node={node!r} with unknown type={ttype!r}')
        return self.risk.risk(node, ttype)

    def max_risk(self, node: str) -> float:
        return max((self.risk_of(node, t) for t in self.traffic_types), default=BASELINE_RISK)

    def is_placeable(self, node: str) -> bool:
        """Whether firewalls / inspection posts may be deployed on the given node"""
        return self.policy.defend_hosts or self.node_map[node].kind != NodeKind.HOST

    def with_risk(self, values: Mapping[tuple[str, str], float]) -> Scenario:
        """A copy of this scenario with the given risk entries replaced"""
        return replace(self, risk=replace(self.risk, values={**self.risk.values, **values}))

    def with_overrides(
        self,
        paths_per_pair: int | None = None,
        alpha: Sequence[float] | None = None,
        beta: Sequence[float] | None = None,
    ) -> Scenario:
        changes = {}
        if paths_per_pair is not None:
            changes['paths_per_pair'] = paths_per_pair
        if alpha is not None or beta is not None:
            weights = self.weights
            changes['weights'] = Weights(
                tuple(map(float, alpha)) if alpha is not None else weights.alpha,
                tuple(map(float, beta)) if beta is not None else weights.beta,
            )
        return replace(self, **changes) if changes else self


def build_graph(nodes: Sequence[Node], edges: Sequence[Edge]) -> nx.Graph:
    graph = nx.Graph()
    for node in nodes:
        graph.add_node(node.id, kind=node.kind, mem=node.mem)
    for edge in edges:
        if edge.u in graph and edge.v in graph and edge.u != edge.v:
            graph.add_edge(edge.u, edge.v, capacity=edge.capacity, weight=edge.weight)
    return graph


# region Validation


@dataclass(frozen=True)
class Violation:
    kind: str
    entity: str
    message: str

    def __str__(self) -> str:
        return f'{self.entity}: {self.message}'


def _finite(value: float) -> bool:
    return isinstance(value, (int, float)) and math.isfinite(value)


def validate_scenario(scenario: Scenario) -> list[Violation]:
    """
    Check every scenario invariant.

    :param scenario: The scenario to check
    :return: The list of violations, each naming the offending entity.  Empty iff the scenario is valid.
    """
    return list(_iter_violations(scenario))


def _iter_violations(s: Scenario) -> Iterator[Violation]:  # noqa: C901
    node_ids = set()
    for node in s.nodes:
        if node.id in node_ids:
            yield Violation('duplicate_node', f'node {node.id}', 'node ids must be unique')
        node_ids.add(node.id)
        if not _finite(node.mem) or node.mem < 0:
            yield Violation('invalid_memory', f'node {node.id}', f'mem={node.mem} must be finite and >= 0')

    seen_edges = set()
    for edge in s.edges:
        name = f'edge {edge}'
        for end in (edge.u, edge.v):
            if end not in node_ids:
                yield Violation('dangling_edge', name, f'unknown node id {end!r}')
        if edge.u == edge.v:
            yield Violation('self_loop', name, 'self-loops are not allowed')
        if edge.endpoints in seen_edges:
            yield Violation('duplicate_edge', name, 'at most one edge may connect a node pair')
        seen_edges.add(edge.endpoints)
        if not _finite(edge.capacity) or edge.capacity <= 0:
            yield Violation('invalid_capacity', name, f'capacity={edge.capacity} must be finite and > 0')
        if not _finite(edge.weight) or edge.weight <= 0:
            yield Violation('invalid_weight', name, f'weight={edge.weight} must be finite and > 0')

    types = set()
    for ttype in s.traffic_types:
        if ttype == WILDCARD:
            yield Violation('wildcard_type', f'type {ttype}', 'the wildcard type may only be used for firewalls')
        elif not ttype:
            yield Violation('invalid_type', 'type ""', 'traffic type names must not be empty')
        if ttype in types:
            yield Violation('duplicate_type', f'type {ttype}', 'traffic type names must be unique')
        types.add(ttype)

    seen_flows = set()
    for flow in s.flows:
        name = f'flow {flow}'
        if flow.src == flow.dst:
            yield Violation('degenerate_flow', name, 'source and destination must differ')
        if flow.ttype == WILDCARD:
            yield Violation('wildcard_flow', name, 'flows may not use the wildcard traffic type')
        elif flow.ttype not in types:
            yield Violation('unknown_type', name, f'unknown traffic type {flow.ttype!r}')
        if not _finite(flow.demand) or flow.demand <= 0:
            yield Violation('invalid_demand', name, f'demand={flow.demand} must be finite and > 0')
        if flow.key in seen_flows:
            yield Violation('duplicate_flow', name, '(src, dst, type) must be unique')
        seen_flows.add(flow.key)
        for end in (flow.src, flow.dst):
            if end not in node_ids:
                yield Violation('dangling_flow', name, f'unknown node id {end!r}')
            elif s.node_map[end].kind == NodeKind.SWITCH:
                yield Violation('invalid_endpoint', name, f'endpoint {end} must be a host or gateway')

    for (node, ttype), value in s.risk.values.items():
        name = f'risk({node}, {ttype})'
        if node not in node_ids:
            yield Violation('dangling_risk', name, f'unknown node id {node!r}')
        if ttype not in types or ttype == WILDCARD:
            yield Violation('unknown_type', name, f'unknown traffic type {ttype!r}')
        if not _finite(value) or value < 1:
            yield Violation('invalid_risk', name, f'value={value} must be finite and >= 1')
    if not isinstance(s.risk.radius, int) or s.risk.radius < 0:
        yield Violation('invalid_radius', 'risk_radius', f'radius={s.risk.radius} must be an integer >= 0')

    costs = s.costs
    for ttype, value in costs.fw_cost.items():
        if ttype != WILDCARD and ttype not in types:
            yield Violation('unknown_type', f'fw_cost({ttype})', f'unknown traffic type {ttype!r}')
        if not _finite(value) or value < 0:
            yield Violation('invalid_cost', f'fw_cost({ttype})', f'value={value} must be finite and >= 0')
    for attr in ('pi_cost', 'fw_comp', 'pi_comp'):
        if not _finite(value := getattr(costs, attr)) or value < 0:
            yield Violation('invalid_cost', attr, f'value={value} must be finite and >= 0')
    if costs.penalty_scale is not None and (not _finite(costs.penalty_scale) or costs.penalty_scale <= 0):
        yield Violation('invalid_cost', 'penalty_scale', f'value={costs.penalty_scale} must be finite and > 0')

    for attr, expected in (('alpha', 3), ('beta', 4)):
        values = getattr(s.weights, attr)
        if len(values) != expected:
            yield Violation('invalid_weights', attr, f'expected {expected} values, found {len(values)}')
        if not all(_finite(v) and v >= 0 for v in values):
            yield Violation('invalid_weights', attr, f'values={values} must be finite and >= 0')

    if not isinstance(s.paths_per_pair, int) or s.paths_per_pair < 1:
        yield Violation('invalid_k', 'paths_per_pair', f'value={s.paths_per_pair} must be an integer >= 1')

    policy = s.policy
    threshold = policy.low_risk_threshold
    if threshold is not None and not (_finite(threshold) and threshold > 0):
        yield Violation('invalid_policy', 'low_risk_threshold', f'value={policy.low_risk_threshold} must be > 0')
    if not (_finite(policy.high_risk_fraction) and 0 < policy.high_risk_fraction <= 1):
        yield Violation('invalid_policy', 'high_risk_fraction', f'value={policy.high_risk_fraction} must be in (0, 1]')

    graph = build_graph(s.nodes, s.edges)
    for flow in s.flows:
        if flow.src in graph and flow.dst in graph and flow.src != flow.dst:
            if not nx.has_path(graph, flow.src, flow.dst):
                yield Violation('unreachable', f'flow {flow}', f'{flow.dst} is unreachable from {flow.src}')


# endregion

# region Parsing


def parse_scenario(data: bytes | str) -> Scenario:
    """
    Parse and validate scenario file text.

    :param data: UTF-8 scenario text (JSON-structured)
    :return: A validated :class:`Scenario`
    :raises ScenarioSyntaxError: If the text is not valid JSON
    :raises ScenarioSemanticError: If the content violates any scenario invariant
    """
    if isinstance(data, bytes):
        try:
            data = data.decode('utf-8')
        except UnicodeDecodeError as e:
            raise ScenarioSyntaxError(f'Invalid UTF-8: {e.reason}', 1, e.start + 1) from e
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise ScenarioSyntaxError(e.msg, e.lineno, e.colno) from e

    scenario = _ScenarioReader(raw).read()
    if violations := validate_scenario(scenario):
        raise ScenarioSemanticError('Invalid scenario', violations)
    log.debug(
        f'Parsed scenario with {len(scenario.nodes)} nodes, {len(scenario.edges)} edges, {len(scenario.flows)} flows'
    )
    return scenario


class _ScenarioReader:
    __slots__ = ('raw',)

    def __init__(self, raw: Any):
        self.raw = raw

    def read(self) -> Scenario:
        raw = self.raw
        if not isinstance(raw, dict):
            raise _shape_error('scenario', 'the top level must be an object')
        if unknown := set(raw).difference(TOP_LEVEL_KEYS):
            raise _shape_error('scenario', f'unknown keys: {", ".join(sorted(unknown))}')
        if missing := REQUIRED_KEYS.difference(raw):
            raise _shape_error('scenario', f'missing required keys: {", ".join(sorted(missing))}')

        return Scenario(
            nodes=tuple(self._node(i, entry) for i, entry in enumerate(_list(raw, 'nodes'))),
            edges=tuple(self._edge(i, entry) for i, entry in enumerate(_list(raw, 'edges'))),
            traffic_types=tuple(_str(t, f'traffic_types[{i}]') for i, t in enumerate(_list(raw, 'traffic_types'))),
            flows=tuple(self._flow(i, entry) for i, entry in enumerate(_list(raw, 'flows'))),
            risk=self._risk(),
            costs=self._costs(),
            weights=self._weights(),
            paths_per_pair=_int(raw.get('paths_per_pair', DEFAULT_PATHS_PER_PAIR), 'paths_per_pair'),
            policy=self._policy(),
        )

    def _node(self, i: int, entry: Any) -> Node:
        where = f'nodes[{i}]'
        entry = _obj(entry, where, {'id', 'kind', 'mem'}, {'id', 'kind'})
        kind = _str(entry['kind'], f'{where}.kind')
        try:
            node_kind = NodeKind(kind)
        except ValueError:
            raise _shape_error(f'{where}.kind', f'unknown node kind {kind!r}') from None
        return Node(_str(entry['id'], f'{where}.id'), node_kind, _real(entry.get('mem', 0), f'{where}.mem'))

    def _edge(self, i: int, entry: Any) -> Edge:
        where = f'edges[{i}]'
        entry = _obj(entry, where, {'endpoints', 'capacity', 'weight'}, {'endpoints', 'capacity'})
        ends = entry['endpoints']
        if not isinstance(ends, list) or len(ends) != 2:
            raise _shape_error(f'{where}.endpoints', 'expected a list of exactly 2 node ids')
        u, v = (_str(end, f'{where}.endpoints') for end in ends)
        capacity = _real(entry['capacity'], f'{where}.capacity')
        return Edge(u, v, capacity, _real(entry.get('weight', 1), f'{where}.weight'))

    def _flow(self, i: int, entry: Any) -> FlowSpec:
        where = f'flows[{i}]'
        entry = _obj(entry, where, {'src', 'dst', 'type', 'demand'}, {'src', 'dst', 'type', 'demand'})
        return FlowSpec(
            _str(entry['src'], f'{where}.src'),
            _str(entry['dst'], f'{where}.dst'),
            _str(entry['type'], f'{where}.type'),
            _real(entry['demand'], f'{where}.demand'),
        )

    def _risk(self) -> RiskModel:
        values = {}
        for i, entry in enumerate(_list(self.raw, 'risk', required=False)):
            where = f'risk[{i}]'
            entry = _obj(entry, where, {'node', 'type', 'value'}, {'node', 'type', 'value'})
            key = (_str(entry['node'], f'{where}.node'), _str(entry['type'], f'{where}.type'))
            if key in values:
                raise _shape_error(where, f'duplicate risk entry for {key}')
            values[key] = _real(entry['value'], f'{where}.value')
        return RiskModel(values, _int(self.raw.get('risk_radius', DEFAULT_RADIUS), 'risk_radius'))

    def _costs(self) -> SecurityCosts:
        entry = _obj(self.raw.get('costs', {}), 'costs', {'fw_cost', 'pi_cost', 'fw_comp', 'pi_comp', 'penalty_scale'})
        default = SecurityCosts()
        fw_cost = entry.get('fw_cost', {})
        if not isinstance(fw_cost, dict):
            raise _shape_error('costs.fw_cost', 'expected an object mapping traffic types to costs')
        scale = entry.get('penalty_scale')
        return SecurityCosts(
            fw_cost={_str(k, 'costs.fw_cost'): _real(v, f'costs.fw_cost.{k}') for k, v in fw_cost.items()},
            pi_cost=_real(entry.get('pi_cost', default.pi_cost), 'costs.pi_cost'),
            fw_comp=_real(entry.get('fw_comp', default.fw_comp), 'costs.fw_comp'),
            pi_comp=_real(entry.get('pi_comp', default.pi_comp), 'costs.pi_comp'),
            penalty_scale=None if scale is None else _real(scale, 'costs.penalty_scale'),
        )

    def _weights(self) -> Weights:
        entry = _obj(self.raw.get('weights', {}), 'weights', {'alpha', 'beta'})
        default = Weights()
        alpha = entry.get('alpha', default.alpha)
        beta = entry.get('beta', default.beta)
        if not isinstance(alpha, (list, tuple)) or not isinstance(beta, (list, tuple)):
            raise _shape_error('weights', 'alpha and beta must be lists of numbers')
        return Weights(
            tuple(_real(v, f'weights.alpha[{i}]') for i, v in enumerate(alpha)),
            tuple(_real(v, f'weights.beta[{i}]') for i, v in enumerate(beta)),
        )

    def _policy(self) -> Policy:
        entry = _obj(self.raw.get('policy', {}), 'policy', {'low_risk_threshold', 'high_risk_fraction', 'defend_hosts'})
        default = Policy()
        threshold = entry.get('low_risk_threshold')
        defend_hosts = entry.get('defend_hosts', default.defend_hosts)
        if not isinstance(defend_hosts, bool):
            raise _shape_error('policy.defend_hosts', 'expected true or false')
        return Policy(
            None if threshold is None else _real(threshold, 'policy.low_risk_threshold'),
            _real(entry.get('high_risk_fraction', default.high_risk_fraction), 'policy.high_risk_fraction'),
            defend_hosts,
        )


def _shape_error(where: str, message: str) -> ScenarioSemanticError:
    return ScenarioSemanticError('Invalid scenario', [Violation('invalid_structure', where, message)])


def _list(raw: dict[str, Any], key: str, required: bool = True) -> list[Any]:
    value = raw.get(key) if required else raw.get(key, [])
    if not isinstance(value, list):
        raise _shape_error(key, 'expected a list')
    return value


def _obj(value: Any, where: str, allowed: set[str], required: set[str] = frozenset()) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise _shape_error(where, 'expected an object')
    if unknown := set(value).difference(allowed):
        raise _shape_error(where, f'unknown keys: {", ".join(sorted(unknown))}')
    if missing := required.difference(value):
        raise _shape_error(where, f'missing keys: {", ".join(sorted(missing))}')
    return value


def _str(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise _shape_error(where, f'expected a string, found {value!r}')
    return value


def _real(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _shape_error(where, f'expected a number, found {value!r}')
    return float(value)


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _shape_error(where, f'expected an integer, found {value!r}')
    return value


# endregion


def serialize_scenario(scenario: Scenario) -> str:
    """Render the given scenario as scenario file text; the inverse of :func:`parse_scenario`"""
    costs = scenario.costs
    policy = scenario.policy
    data = {
        'nodes': [{'id': n.id, 'kind': n.kind.value, 'mem': n.mem} for n in scenario.nodes],
        'edges': [{'endpoints': [e.u, e.v], 'capacity': e.capacity, 'weight': e.weight} for e in scenario.edges],
        'traffic_types': list(scenario.traffic_types),
        'flows': [{'src': f.src, 'dst': f.dst, 'type': f.ttype, 'demand': f.demand} for f in scenario.flows],
        'risk': [
            {'node': node, 'type': ttype, 'value': value}
            for (node, ttype), value in sorted(scenario.risk.values.items())
        ],
        'risk_radius': scenario.risk.radius,
        'costs': {
            'fw_cost': dict(costs.fw_cost),
            'pi_cost': costs.pi_cost,
            'fw_comp': costs.fw_comp,
            'pi_comp': costs.pi_comp,
            'penalty_scale': costs.penalty_scale,
        },
        'weights': {'alpha': list(scenario.weights.alpha), 'beta': list(scenario.weights.beta)},
        'paths_per_pair': scenario.paths_per_pair,
        'policy': {
            'low_risk_threshold': policy.low_risk_threshold,
            'high_risk_fraction': policy.high_risk_fraction,
            'defend_hosts': policy.defend_hosts,
        },
    }
    return json.dumps(data, indent=2) + '\n'
