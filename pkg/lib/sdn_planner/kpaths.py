"""
Path priming: the k least-cost simple paths for every flow endpoint pair, and the pool that indexes them.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import islice, pairwise
from typing import Iterable, Iterator

import networkx as nx
from ds_tools.caching.decorators import cached_property

from .exceptions import NoPathError
from .scenario import Scenario

__all__ = ['Path', 'PathPool', 'k_shortest_paths', 'build_pool']
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Path:
    id: int
    nodes: tuple[str, ...]
    cost: float

    @property
    def src(self) -> str:
        return self.nodes[0]

    @property
    def dst(self) -> str:
        return self.nodes[-1]

    @property
    def length(self) -> int:
        """Hop count"""
        return len(self.nodes) - 1

    @cached_property
    def edges(self) -> tuple[frozenset[str], ...]:
        return tuple(frozenset(pair) for pair in pairwise(self.nodes))

    @cached_property
    def node_set(self) -> frozenset[str]:
        return frozenset(self.nodes)

    def rank(self, node: str) -> int:
        """Position of the given node along this path; the source has rank 0"""
        return self.nodes.index(node)

    def next_hop(self, node: str) -> str | None:
        try:
            return self.nodes[self.nodes.index(node) + 1]
        except IndexError:
            return None

    def __str__(self) -> str:
        return '-'.join(self.nodes)


def k_shortest_paths(graph: nx.Graph, s: str, t: str, k: int, start_id: int = 0) -> list[Path]:
    """
    Find the ``k`` least-cost simple paths from ``s`` to ``t``.

    Costs are the sum of edge ``weight`` attributes (1 per hop when absent).  Paths of equal cost are ordered
    lexicographically by their node id sequence, which requires pulling every path that ties with the k-th one from
    the underlying generator before truncating.

    :param graph: The physical topology
    :param s: Source node id
    :param t: Destination node id
    :param k: The maximum number of paths to return
    :param start_id: The id to assign to the first returned path
    :return: Up to ``k`` paths in nondecreasing cost order (empty when ``t`` is unreachable)
    """
    if k < 1:
        raise ValueError(f'Invalid k={k} - must be >= 1')
    try:
        simple_paths = nx.shortest_simple_paths(graph, s, t, weight='weight')
        found = []
        for nodes in simple_paths:
            cost = sum(graph.edges[u, v].get('weight', 1) for u, v in pairwise(nodes))
            if len(found) >= k and cost > found[k - 1][0]:
                break
            found.append((cost, tuple(nodes)))
    except nx.NetworkXNoPath:
        return []

    found.sort()
    return [Path(start_id + i, nodes, cost) for i, (cost, nodes) in enumerate(islice(found, k))]


class PathPool:
    """Scenario-wide candidate path pool with edge / node / endpoint pair indexes"""

    __slots__ = ('paths', 'by_edge', 'by_node', 'by_pair')

    def __init__(self, paths: Iterable[Path] = ()):
        self.paths: tuple[Path, ...] = tuple(paths)
        self.by_edge: dict[frozenset[str], frozenset[int]] = {}
        self.by_node: dict[str, frozenset[int]] = {}
        self.by_pair: dict[tuple[str, str], tuple[int, ...]] = {}

        by_edge, by_node, by_pair = {}, {}, {}
        for path in self.paths:
            for edge in path.edges:
                by_edge.setdefault(edge, set()).add(path.id)
            for node in path.nodes:
                by_node.setdefault(node, set()).add(path.id)
            by_pair.setdefault((path.src, path.dst), []).append(path.id)

        self.by_edge = {edge: frozenset(ids) for edge, ids in by_edge.items()}
        self.by_node = {node: frozenset(ids) for node, ids in by_node.items()}
        self.by_pair = {pair: tuple(ids) for pair, ids in by_pair.items()}

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self) -> Iterator[Path]:
        return iter(self.paths)

    def __getitem__(self, path_id: int) -> Path:
        return self.paths[path_id]

    def for_pair(self, s: str, t: str) -> tuple[Path, ...]:
        return tuple(self.paths[i] for i in self.by_pair.get((s, t), ()))

    def through_node(self, node: str) -> frozenset[int]:
        return self.by_node.get(node, frozenset())

    def through_edge(self, u: str, v: str) -> frozenset[int]:
        return self.by_edge.get(frozenset((u, v)), frozenset())

    def touching(self, members: Iterable[str]) -> frozenset[int]:
        """The ids of all paths that contain any of the given nodes"""
        return frozenset().union(*(self.through_node(node) for node in members))

    def dump(self) -> str:
        lines = [f'{p.id} {p.src} {p.dst} len={p.length} {p}' for p in self.paths]
        return '\n'.join(lines) + '\n' if lines else ''


def build_pool(scenario: Scenario) -> PathPool:
    """
    Prime the candidate path pool with the ``scenario.paths_per_pair`` least-cost paths for every distinct
    (src, dst) pair that appears in the scenario's flows.

    :raises NoPathError: If any flow's destination is unreachable from its source
    """
    graph = scenario.graph
    paths: list[Path] = []
    seen = set()
    for flow in scenario.flows:
        if flow.pair in seen:
            continue
        seen.add(flow.pair)
        found = k_shortest_paths(graph, flow.src, flow.dst, scenario.paths_per_pair, start_id=len(paths))
        if not found:
            raise NoPathError(flow)
        log.log(19, f'Found {len(found)} candidate paths for {flow.src}->{flow.dst}')
        paths.extend(found)

    log.debug(f'Primed path pool with {len(paths)} paths for {len(seen)} endpoint pairs')
    return PathPool(paths)
