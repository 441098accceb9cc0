"""
Security layer: place firewalls and packet-inspection posts against a fixed routing.

Every functional quantity (active paths, flow amounts, node loads) enters this model as a constant.  A firewall for a
traffic type blocks every flow of that type whose active path crosses it; a block-everything firewall (type ``*``)
blocks every flow crossing it.  The residual risk of a path is scaled by its risk factor, the smallest of the risk
multipliers contributed by the defenses on its nodes; defenses closer to the source reduce it more.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .exceptions import InfeasibleError, SolutionVerificationError, RiskError
from .functional import FunctionalSolution
from .kpaths import Path
from .optimkit import ModelIR, VarRef, LinExpr, Relation, LogicBuilder, BoolTerm, SolveStatus, add_min_select
from .optimkit.backends import SolverBackend
from .risk import FlowRisks
from .scenario import Scenario, FlowSpec
from .utils import WILDCARD, fmt_num

__all__ = ['SecurityModel', 'SecuritySolution', 'build_security_model', 'solve_security', 'risk_factor', 'BREAKDOWN']
log = logging.getLogger(__name__)

EPS = 1e-6
FW_DECAY = 0.5
PI_FACTOR = 0.1
BREAKDOWN = ('complexity', 'inspection_load', 'blocking', 'residual_risk')


class SecurityModel:
    def __init__(self, scenario: Scenario, func_sol: FunctionalSolution, risks: FlowRisks):
        self.scenario = scenario
        self.func_sol = func_sol
        self.risks = risks
        self.model = ModelIR('security')
        self.logic = LogicBuilder(self.model)
        self.fw: dict[tuple[str, str], VarRef] = {}
        self.pi: dict[str, VarRef] = {}
        self.fw_or: dict[tuple[str, str], BoolTerm] = {}
        self.fw_op: dict[FlowSpec, BoolTerm] = {}
        self.rm_fw: dict[tuple[FlowSpec, str], VarRef] = {}
        self.rm_pi: dict[tuple[FlowSpec, str], VarRef] = {}
        self.rf: dict[FlowSpec, VarRef | float] = {}
        self.penalty: dict[FlowSpec, float] = {}
        self._build()

    def __repr__(self) -> str:
        return f'<{self.__class__.__name__}[flows={len(self.func_sol.active_paths)}, {self.model}]>'

    @property
    def active_paths(self) -> dict[FlowSpec, Path]:
        return self.func_sol.active_paths

    def _build(self):
        self._add_defenses()
        for flow, path in self.active_paths.items():
            if flow not in self.risks.values:
                raise RiskError(f'No flowRisk was computed for active flow {flow}')
            terms = [self._fw_or(node, flow.ttype) for node in path.nodes]
            self.fw_op[flow] = self.logic.any_of(terms, f'fwOP[{flow}]')

        beta0, beta1, beta2, beta3 = self.scenario.weights.beta
        if beta3:
            for flow, path in self.active_paths.items():
                self._add_risk_factor(flow, path)
        else:
            self.rf = {flow: 1.0 for flow in self.active_paths}

        costs = self.scenario.costs
        complexity = costs.fw_comp * LinExpr.sum(self.fw.values()) + costs.pi_comp * LinExpr.sum(self.pi.values())
        loads = self.func_sol.loads
        inspection = LinExpr.sum(loads.get(node, 0.0) * var for node, var in self.pi.items())
        scale = costs.penalty_scale if costs.penalty_scale is not None else self.risks.max
        blocking = LinExpr()
        residual = LinExpr()
        for flow in self.active_paths:
            flow_risk = self.risks[flow]
            self.penalty[flow] = scale / flow_risk if flow_risk else 0.0
            if isinstance(fw_op := self.fw_op[flow], VarRef):
                blocking += self.penalty[flow] * self.func_sol.flows[flow] * fw_op
            rf = self.rf[flow]
            residual += flow_risk * rf

        self.model.minimize(beta0 * complexity + beta1 * inspection + beta2 * blocking + beta3 * residual)
        log.debug(f'Built {self}')

    def _add_defenses(self):
        scenario, model = self.scenario, self.model
        pi_cost = scenario.costs.pi_cost
        for node in sorted(scenario.node_map):
            if not scenario.is_placeable(node):
                continue
            mem = scenario.node_map[node].mem
            usage = LinExpr()
            for ttype in (*scenario.traffic_types, WILDCARD):
                if (cost := scenario.fw_cost(ttype)) <= mem:
                    var = self.fw[node, ttype] = model.add_binary(f'fw[{node}:{ttype}]')
                    usage += cost * var
            if pi_cost <= mem:
                var = self.pi[node] = model.add_binary(f'pi[{node}]')
                usage += pi_cost * var
            if usage.terms:
                model.add_constraint(usage, Relation.LE, mem, f'memory[{node}]')

    def _fw_or(self, node: str, ttype: str) -> BoolTerm:
        key = (node, ttype)
        try:
            return self.fw_or[key]
        except KeyError:
            pass
        inputs = [var for var in (self.fw.get(key), self.fw.get((node, WILDCARD))) if var is not None]
        term = self.fw_or[key] = self.logic.any_of(inputs, f'fwOR[{node}:{ttype}]')
        return term

    def _add_risk_factor(self, flow: FlowSpec, path: Path):
        model = self.model
        terms = []
        for node in path.nodes:
            decay = FW_DECAY ** path.rank(node)
            if isinstance(fw_or := self._fw_or(node, flow.ttype), VarRef):
                rm = self.rm_fw[flow, node] = model.add_continuous(f'RMfw[{flow}@{node}]', 0, 1)
                model.add_constraint(rm + decay * fw_or, Relation.EQ, 1, f'RMfw[{flow}@{node}]')
                terms.append(rm)
            if pi := self.pi.get(node):
                rm = self.rm_pi[flow, node] = model.add_continuous(f'RMpi[{flow}@{node}]', 0, 1)
                model.add_constraint(rm + PI_FACTOR * decay * pi, Relation.EQ, 1, f'RMpi[{flow}@{node}]')
                terms.append(rm)

        if terms:
            rf = self.rf[flow] = model.add_continuous(f'rf[{flow}]', 0, 1)
            add_min_select(model, rf, terms)
        else:
            self.rf[flow] = 1.0


def build_security_model(scenario: Scenario, func_sol: FunctionalSolution, risks: FlowRisks) -> SecurityModel:
    """
    :param scenario: The problem instance
    :param func_sol: The validated functional solution whose routing is held fixed
    :param risks: The risk of every active flow
    :raises RiskError: If a risk value is missing for an active flow
    """
    return SecurityModel(scenario, func_sol, risks)


def risk_factor(path: Path, ttype: str, fw: frozenset[tuple[str, str]], pi: frozenset[str]) -> float:
    """The smallest risk multiplier of any defense on the given path (1 when it is undefended)"""
    factor = 1.0
    for node in path.nodes:
        decay = FW_DECAY ** path.rank(node)
        if (node, ttype) in fw or (node, WILDCARD) in fw:
            factor = min(factor, 1 - decay)
        if node in pi:
            factor = min(factor, 1 - PI_FACTOR * decay)
    return factor


def _blocks(path: Path, ttype: str, fw: frozenset[tuple[str, str]]) -> bool:
    return any((node, ttype) in fw or (node, WILDCARD) in fw for node in path.nodes)


@dataclass
class SecuritySolution:
    fw: frozenset[tuple[str, str]]
    pi: frozenset[str]
    fw_op: dict[FlowSpec, bool]
    rf: dict[FlowSpec, float]
    blocked_flows: tuple[FlowSpec, ...]
    objective: float
    breakdown: dict[str, float] = field(default_factory=dict)
    nodes_explored: int = 0

    @property
    def served_flows(self) -> tuple[FlowSpec, ...]:
        return tuple(flow for flow, blocked in self.fw_op.items() if not blocked)

    def report(self) -> str:
        lines = [f'fw {node} {ttype}' for node, ttype in sorted(self.fw)]
        lines.extend(f'pi {node}' for node in sorted(self.pi))
        lines.extend(f'blocked {f.src} {f.dst} {f.ttype}' for f in self.blocked_flows)
        lines.extend(f'objective_{name} {fmt_num(value)}' for name, value in self.breakdown.items())
        lines.append(f'objective {fmt_num(self.objective)}')
        return '\n'.join(lines) + '\n'


def solve_security(smodel: SecurityModel, backend: SolverBackend) -> SecuritySolution:
    """
    Solve the security model, then extract and re-validate the placements.

    :raises InfeasibleError: If the memory constraints cannot be satisfied
    :raises SolutionVerificationError: If the extracted placements are inconsistent with the solver's indicators
    """
    solution = backend.solve(smodel.model)
    if solution.status == SolveStatus.INFEASIBLE:
        raise InfeasibleError('security', ['device memory constraints conflict with the required placements'])

    scenario = smodel.scenario
    fw = frozenset(key for key, var in smodel.fw.items() if solution.is_set(var))
    pi = frozenset(node for node, var in smodel.pi.items() if solution.is_set(var))
    violations = []
    for node in sorted({n for n, _ in fw} | pi):
        used = sum(scenario.fw_cost(t) for n, t in fw if n == node) + (scenario.costs.pi_cost if node in pi else 0)
        if used > (mem := scenario.node_map[node].mem) + EPS:
            violations.append(f'node {node} uses {used:g} > mem={mem:g}')

    fw_op, rf = {}, {}
    check_rf = solution.status == SolveStatus.OPTIMAL
    for flow, path in smodel.active_paths.items():
        blocked = fw_op[flow] = _blocks(path, flow.ttype, fw)
        if blocked != solution.is_set(smodel.fw_op[flow]):
            violations.append(f'fwOP[{flow}] disagrees with the firewall placements')
        expected = rf[flow] = risk_factor(path, flow.ttype, fw, pi)
        if check_rf and isinstance(var := smodel.rf[flow], VarRef) and abs(solution[var] - expected) > 1e-5:
            violations.append(f'rf[{flow}]={solution[var]:g} != recomputed minimum={expected:g}')

    if violations:
        raise SolutionVerificationError('Invalid security solution', violations)

    beta = scenario.weights.beta
    costs = scenario.costs
    func_sol, risks = smodel.func_sol, smodel.risks
    values = (
        costs.fw_comp * len(fw) + costs.pi_comp * len(pi),
        sum(func_sol.loads.get(node, 0.0) for node in pi),
        sum(smodel.penalty[flow] * func_sol.flows[flow] for flow, blocked in fw_op.items() if blocked),
        sum(risks[flow] * rf[flow] for flow in fw_op),
    )
    breakdown = {name: weight * value for name, weight, value in zip(BREAKDOWN, beta, values)}
    blocked_flows = tuple(flow for flow, blocked in fw_op.items() if blocked)
    objective = sum(breakdown.values())
    log.info(
        f'Security solve: objective={objective:.4f} firewalls={len(fw)} inspection posts={len(pi)}'
        f' blocked flows={len(blocked_flows)} nodes explored={solution.nodes_explored}'
    )
    return SecuritySolution(
        fw=fw,
        pi=pi,
        fw_op=fw_op,
        rf=rf,
        blocked_flows=blocked_flows,
        objective=objective,
        breakdown=breakdown,
        nodes_explored=solution.nodes_explored,
    )
