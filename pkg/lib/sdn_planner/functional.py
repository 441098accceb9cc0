"""
Functional layer: route every flow over exactly one candidate path within edge capacities, balance node load, and
(softly) keep segregated equivalence classes off shared nodes.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import pairwise
from typing import Iterable, Mapping

from .exceptions import ModelError, NoPathError, InfeasibleError, SolutionVerificationError
from .kpaths import Path, PathPool
from .optimkit import ModelIR, VarRef, LinExpr, Relation, LogicBuilder, BoolTerm, SolveStatus, add_indicator_lb
from .optimkit.backends import SolverBackend
from .scenario import Scenario, FlowSpec
from .utils import fmt_num, join_members

__all__ = [
    'EquivalenceClass',
    'SegregationRule',
    'FunctionalModel',
    'FunctionalSolution',
    'build_functional_model',
    'solve_functional',
    'shared_nodes',
]
log = logging.getLogger(__name__)

EPS = 1e-6
#: Minimum amount routed over an active path
MIN_PATH_FLOW = 1.0


@dataclass(frozen=True)
class EquivalenceClass:
    id: str
    members: frozenset[str]

    def __post_init__(self):
        if not self.members:
            raise ModelError(f'Equivalence class {self.id!r} must not be empty')

    @classmethod
    def of(cls, members: Iterable[str]) -> EquivalenceClass:
        members = frozenset(members)
        return cls(join_members(members), members)

    def __str__(self) -> str:
        return f'({join_members(self.members)})'


@dataclass(frozen=True)
class SegregationRule:
    """An unordered pair of equivalence class ids; the ids are stored in sorted order"""

    first: str
    second: str

    def __post_init__(self):
        if self.first == self.second:
            raise ModelError(f'A segregation rule requires two distinct classes (found {self.first!r} twice)')
        if self.second < self.first:
            first, second = self.second, self.first
            object.__setattr__(self, 'first', first)
            object.__setattr__(self, 'second', second)

    @classmethod
    def between(cls, first: EquivalenceClass, second: EquivalenceClass) -> SegregationRule:
        return cls(first.id, second.id)

    def __str__(self) -> str:
        return f'({self.first})x({self.second})'


class FunctionalModel:
    """
    Holds the functional :class:`ModelIR` along with the mapping from domain entities to its variables.

    Variables are only created where they can vary: an equivalence indicator whose candidate paths cover a whole
    flow's candidate set is constant True, one without candidate paths is constant False, and a share indicator is
    only created for nodes that both classes' candidate paths can reach.
    """

    def __init__(
        self,
        scenario: Scenario,
        pool: PathPool,
        classes: Mapping[str, EquivalenceClass] | Iterable[EquivalenceClass] = (),
        rules: Iterable[SegregationRule] = (),
    ):
        self.scenario = scenario
        self.pool = pool
        if not isinstance(classes, Mapping):
            classes = {cls.id: cls for cls in classes}
        self.classes: dict[str, EquivalenceClass] = dict(classes)
        self.rules: tuple[SegregationRule, ...] = tuple(dict.fromkeys(rules))
        for rule in self.rules:
            for class_id in (rule.first, rule.second):
                if class_id not in self.classes:
                    raise ModelError(f'Segregation rule {rule} references unknown equivalence class {class_id!r}')

        self.model = ModelIR('functional')
        self.logic = LogicBuilder(self.model)
        self.candidates: dict[FlowSpec, tuple[Path, ...]] = {}
        self.bottleneck: dict[int, float] = {}
        self.active: dict[tuple[FlowSpec, int], VarRef] = {}
        self.flow: dict[tuple[FlowSpec, int], VarRef] = {}
        self.load: dict[str, VarRef] = {}
        self.path_active: dict[int, BoolTerm] = {}
        self.equiv: dict[tuple[str, str], BoolTerm] = {}
        self.share: dict[tuple[SegregationRule, str], BoolTerm] = {}
        self._build()

    def __repr__(self) -> str:
        return f'<{self.__class__.__name__}[flows={len(self.candidates)}, rules={len(self.rules)}, {self.model}]>'

    # region Build

    def _build(self):
        model, scenario = self.model, self.scenario
        path_flows: dict[int, list[VarRef]] = defaultdict(list)
        path_actives: dict[int, list[VarRef]] = defaultdict(list)
        for flow in scenario.flows:
            if not (paths := self.pool.for_pair(flow.src, flow.dst)):
                raise NoPathError(flow)
            self.candidates[flow] = paths
            actives, amounts = [], []
            for path in paths:
                x, f = self._add_path_vars(flow, path)
                actives.append(x)
                amounts.append(f)
                path_actives[path.id].append(x)
                path_flows[path.id].append(f)

            model.add_constraint(LinExpr.sum(actives), Relation.EQ, 1, f'one_path[{flow}]')
            model.add_constraint(LinExpr.sum(amounts), Relation.GE, flow.demand, f'demand[{flow}]')
            self.logic.register_exactly_one(actives)

        for edge, path_ids in sorted(self.pool.by_edge.items(), key=lambda kv: sorted(kv[0])):
            amounts = [f for pid in sorted(path_ids) for f in path_flows[pid]]
            if amounts:
                u, v = sorted(edge)
                model.add_constraint(
                    LinExpr.sum(amounts), Relation.LE, scenario.edge(u, v).capacity, f'capacity[{u}--{v}]'
                )

        for pid in sorted(path_actives):
            self.path_active[pid] = self.logic.any_of(path_actives[pid], f'active[p{pid}:*]')

        self._add_loads(path_flows)
        reward = self._add_segregation()

        alpha0, alpha1, alpha2 = scenario.weights.alpha
        length_term = LinExpr.sum(self.pool[pid].length * f for pid, fs in path_flows.items() for f in fs)
        model.minimize(alpha0 * length_term + alpha1 * reward)
        if alpha2:
            for var in self.load.values():
                model.add_quadratic(alpha2, var)
        log.debug(f'Built {self}')

    def _add_path_vars(self, flow: FlowSpec, path: Path) -> tuple[VarRef, VarRef]:
        tag = f'{flow.src}>{flow.dst}:{flow.ttype}:p{path.id}'
        bottleneck = min(self.scenario.edge(u, v).capacity for u, v in pairwise(path.nodes))
        self.bottleneck[path.id] = bottleneck
        x = self.active[flow, path.id] = self.model.add_binary(f'active[{tag}]')
        f = self.flow[flow, path.id] = self.model.add_continuous(f'flow[{tag}]', 0, bottleneck)
        add_indicator_lb(self.model, x, f, min(MIN_PATH_FLOW, bottleneck), bottleneck)
        if bottleneck < MIN_PATH_FLOW:
            self.model.add_constraint(x, Relation.EQ, 0, f'too_narrow[{tag}]')
        return x, f

    def _add_loads(self, path_flows: dict[int, list[VarRef]]):
        model = self.model
        for node in sorted(self.pool.by_node):
            path_ids = sorted(self.pool.through_node(node))
            amounts = [f for pid in path_ids for f in path_flows[pid]]
            if not amounts:
                continue
            through = {flow for flow, paths in self.candidates.items() if any(p.id in path_ids for p in paths)}
            upper = sum(max(flow.demand, MIN_PATH_FLOW) for flow in through)
            load = self.load[node] = model.add_continuous(f'load[{node}]', 0, upper)
            model.add_constraint(load - LinExpr.sum(amounts), Relation.EQ, 0, f'load[{node}]')

    def _equiv(self, cls: EquivalenceClass, node: str, class_paths: frozenset[int]) -> BoolTerm:
        key = (cls.id, node)
        try:
            return self.equiv[key]
        except KeyError:
            pass
        path_ids = sorted(class_paths & self.pool.through_node(node))
        term = self.logic.any_of((self.path_active[pid] for pid in path_ids), f'equiv[{cls.id}@{node}]')
        self.equiv[key] = term
        return term

    def _add_segregation(self) -> LinExpr:
        """Create share indicators for every rule and node, and return the (non-positive) cut reward expression"""
        reward = LinExpr()
        node_ids = [node.id for node in self.scenario.nodes]
        for rule in self.rules:
            first, second = self.classes[rule.first], self.classes[rule.second]
            first_paths = self.pool.touching(first.members)
            second_paths = self.pool.touching(second.members)
            reachable = _path_nodes(self.pool, first_paths) & _path_nodes(self.pool, second_paths)
            for node in node_ids:
                if node in reachable:
                    terms = (self._equiv(first, node, first_paths), self._equiv(second, node, second_paths))
                    share = self.logic.all_of(terms, f'share[{rule}@{node}]')
                else:
                    share = False
                self.share[rule, node] = share
                reward += (share if isinstance(share, VarRef) else float(share)) - 1
        return reward

    # endregion

    def diagnose(self) -> list[str]:
        """Identify capacity constraints that cannot be satisfied, for infeasibility reports"""
        diagnostics = []
        for flow, paths in self.candidates.items():
            best = max(self.bottleneck[p.id] for p in paths)
            if best < MIN_PATH_FLOW:
                diagnostics.append(f'flow {flow}: no candidate path can carry the minimum flow of {MIN_PATH_FLOW:g}')
            elif best < flow.demand:
                diagnostics.append(
                    f'flow {flow}: demand={flow.demand:g} exceeds the largest candidate path capacity={best:g}'
                )

        forced = defaultdict(float)
        for flow, paths in self.candidates.items():
            for edge in frozenset.intersection(*(frozenset(p.edges) for p in paths)):
                forced[edge] += max(flow.demand, MIN_PATH_FLOW)
        for edge, amount in sorted(forced.items(), key=lambda kv: sorted(kv[0])):
            u, v = sorted(edge)
            if amount > (capacity := self.scenario.edge(u, v).capacity) + EPS:
                diagnostics.append(f'edge {u}--{v}: unavoidable flow={amount:g} exceeds capacity={capacity:g}')

        return diagnostics or ['edge capacity rows are jointly unsatisfiable for the candidate paths']


def _path_nodes(pool: PathPool, path_ids: Iterable[int]) -> frozenset[str]:
    return frozenset().union(*(pool[pid].node_set for pid in path_ids))


def build_functional_model(
    scenario: Scenario,
    pool: PathPool,
    classes: Mapping[str, EquivalenceClass] | Iterable[EquivalenceClass] = (),
    rules: Iterable[SegregationRule] = (),
) -> FunctionalModel:
    """
    :param scenario: The problem instance
    :param pool: The primed candidate path pool covering every flow's endpoint pair
    :param classes: Equivalence classes referenced by the rules
    :param rules: Segregation rules to reward
    :return: The functional model, wrapping its :class:`ModelIR`
    """
    return FunctionalModel(scenario, pool, classes, rules)


def shared_nodes(
    rule: SegregationRule, classes: Mapping[str, EquivalenceClass], active_paths: Iterable[Path]
) -> frozenset[str]:
    """Nodes that lie both on an active path touching the rule's first class and on one touching its second class"""
    active_paths = list(active_paths)
    reach = []
    for class_id in (rule.first, rule.second):
        members = classes[class_id].members
        reach.append(frozenset().union(*(p.node_set for p in active_paths if p.node_set & members)))
    return reach[0] & reach[1]


@dataclass
class FunctionalSolution:
    active_paths: dict[FlowSpec, Path]
    flows: dict[FlowSpec, float]
    loads: dict[str, float]
    share_count: int
    objective: float
    objective_no_cut_reward: float
    rules: tuple[SegregationRule, ...] = ()
    nodes_explored: int = 0
    approximation_bound: float = 0.0
    diagnostics: dict[str, float] = field(default_factory=dict)

    def report(self) -> str:
        lines = [
            f'flow {f.src} {f.dst} {f.ttype} path={path} amount={fmt_num(self.flows[f])}'
            for f, path in self.active_paths.items()
        ]
        lines.extend(f'load {node} {fmt_num(load)}' for node, load in sorted(self.loads.items()) if load)
        lines.append(f'objective {fmt_num(self.objective)}')
        lines.append(f'objective_no_cut_reward {fmt_num(self.objective_no_cut_reward)}')
        return '\n'.join(lines) + '\n'


def solve_functional(fmodel: FunctionalModel, backend: SolverBackend) -> FunctionalSolution:
    """
    Solve the functional model, then extract and re-validate the routing.

    :raises InfeasibleError: If the flows cannot be routed within the edge capacities
    :raises SolutionVerificationError: If the extracted routing violates a functional invariant
    """
    solution = backend.solve(fmodel.model)
    if solution.status == SolveStatus.INFEASIBLE:
        raise InfeasibleError('functional', fmodel.diagnose())

    scenario = fmodel.scenario
    violations = []
    active_paths, flows = {}, {}
    for flow, paths in fmodel.candidates.items():
        chosen = [p for p in paths if solution.is_set(fmodel.active[flow, p.id])]
        if len(chosen) != 1:
            violations.append(f'flow {flow} has {len(chosen)} active paths')
            continue
        path = active_paths[flow] = chosen[0]
        amount = flows[flow] = solution[fmodel.flow[flow, path.id]]
        if amount < flow.demand - EPS:
            violations.append(f'flow {flow} carries {amount:g} < demand={flow.demand:g}')
        if stray := sum(solution[fmodel.flow[flow, p.id]] for p in paths if p is not path):
            if stray > EPS:
                violations.append(f'flow {flow} sends {stray:g} over inactive paths')

    loads = {node.id: 0.0 for node in scenario.nodes}
    edge_flow = defaultdict(float)
    for flow, path in active_paths.items():
        for node in path.nodes:
            loads[node] += flows[flow]
        for edge in path.edges:
            edge_flow[edge] += flows[flow]
    for edge, amount in edge_flow.items():
        u, v = sorted(edge)
        if amount > (capacity := scenario.edge(u, v).capacity) + EPS:
            violations.append(f'edge {u}--{v} carries {amount:g} > capacity={capacity:g}')

    paths = list(active_paths.values())
    share_count = 0
    for rule in fmodel.rules:
        shared = shared_nodes(rule, fmodel.classes, paths) if not violations else frozenset()
        share_count += len(shared)
        for node in scenario.node_map:
            if not violations and solution.is_set(fmodel.share[rule, node]) != (node in shared):
                violations.append(f'share[{rule}@{node}] disagrees with the active paths')

    if violations:
        raise SolutionVerificationError('Invalid functional solution', violations)

    alpha1 = scenario.weights.alpha[1]
    reward = alpha1 * (share_count - len(fmodel.rules) * len(scenario.nodes))
    diagnostics = {
        term.name: solution[term]
        for term in (*fmodel.equiv.values(), *fmodel.share.values())
        if isinstance(term, VarRef)
    }
    log.info(
        f'Functional solve: objective={solution.objective:.4f} shared nodes={share_count}'
        f' nodes explored={solution.nodes_explored}'
    )
    return FunctionalSolution(
        active_paths=active_paths,
        flows=flows,
        loads=loads,
        share_count=share_count,
        objective=solution.objective,
        objective_no_cut_reward=solution.objective - reward,
        rules=fmodel.rules,
        nodes_explored=solution.nodes_explored,
        approximation_bound=solution.approximation_bound,
        diagnostics=diagnostics,
    )
