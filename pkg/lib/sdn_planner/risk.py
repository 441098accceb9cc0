"""
Per-path risk over the logical topology induced by the active paths.

A path's risk counts every node on the path, plus every node within ``radius`` logical hops of either endpoint (to
account for lateral movement), each in proportion to the square of its own risk.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import pairwise
from typing import Callable, Iterable, Mapping

import networkx as nx

from .kpaths import Path
from .scenario import Scenario, FlowSpec
from .utils import fmt_num

__all__ = [
    'LogicalTopology',
    'RiskFunction',
    'FlowRisks',
    'logical_topology',
    'd_k',
    'flow_risk',
    'compute_risks',
    'network_risk',
]
log = logging.getLogger(__name__)

LogicalTopology = nx.Graph
RiskFunction = Callable[[Scenario, LogicalTopology, Path, str], float]


def logical_topology(active_paths: Iterable[Path]) -> LogicalTopology:
    """Nodes on any active path, adjacent when they are consecutive on at least one of them"""
    graph = nx.Graph()
    for path in active_paths:
        graph.add_nodes_from(path.nodes)
        graph.add_edges_from(pairwise(path.nodes))
    return graph


def d_k(topology: LogicalTopology, node: str, k: int) -> frozenset[str]:
    """The nodes within ``k`` logical hops of ``node`` (including itself)"""
    if k < 0:
        raise ValueError(f'Invalid neighborhood radius={k}')
    if node not in topology:
        return frozenset((node,))
    return frozenset(nx.single_source_shortest_path_length(topology, node, cutoff=k))


def flow_risk(scenario: Scenario, topology: LogicalTopology, path: Path, ttype: str) -> float:
    radius = scenario.risk.radius
    covered = d_k(topology, path.src, radius) | d_k(topology, path.dst, radius) | path.node_set
    return sum(scenario.risk_of(node, ttype) ** 2 for node in sorted(covered))


@dataclass
class FlowRisks:
    """flowRisk per active flow, along with the logical topology it was computed over"""

    topology: LogicalTopology
    paths: dict[FlowSpec, Path]
    values: dict[FlowSpec, float]

    def __getitem__(self, flow: FlowSpec) -> float:
        return self.values[flow]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def total(self) -> float:
        return network_risk(self.values)

    @property
    def max(self) -> float:
        return max(self.values.values(), default=0.0)

    def report(self) -> str:
        lines = [
            f'risk {flow.src} {flow.dst} {flow.ttype} path={self.paths[flow]} value={fmt_num(value)}'
            for flow, value in self.values.items()
        ]
        lines.append(f'network_risk {fmt_num(self.total)}')
        return '\n'.join(lines) + '\n'


def compute_risks(
    scenario: Scenario, active_paths: Mapping[FlowSpec, Path], risk_func: RiskFunction = flow_risk
) -> FlowRisks:
    """
    :param scenario: The problem instance
    :param active_paths: The active path of every flow in the current functional solution
    :param risk_func: Any function of (scenario, topology, path, traffic type) returning a non-negative risk
    :return: The risk of every active flow
    """
    topology = logical_topology(active_paths.values())
    values = {}
    for flow, path in active_paths.items():
        value = values[flow] = risk_func(scenario, topology, path, flow.ttype)
        if value < 0:
            raise ValueError(f'Risk function {risk_func.__name__} returned a negative risk={value} for {flow}')
        log.log(19, f'flowRisk[{flow}] over {path} = {value:g}')
    return FlowRisks(topology, dict(active_paths), values)


def network_risk(values: Mapping[FlowSpec, float] | Iterable[float]) -> float:
    if isinstance(values, Mapping):
        values = values.values()
    return float(sum(values))
