"""
Layer coordination: prime the candidate paths, then alternate functional solve, risk evaluation, security solve, and
cut arbitration until no candidate cuts remain.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .exceptions import InfeasibleError, FrameworkAborted
from .feedback import Cut, CutArbiter, Judgement, generate_candidates, judge_cut, high_risk_hosts, EPS_IMPROVE
from .functional import EquivalenceClass, SegregationRule, FunctionalSolution, shared_nodes
from .functional import build_functional_model, solve_functional
from .kpaths import PathPool, build_pool
from .optimkit import SolverLimits
from .optimkit.backends import SolverBackend, get_backend
from .risk import FlowRisks, RiskFunction, compute_risks, flow_risk
from .scenario import Scenario, FlowSpec
from .security import SecuritySolution, build_security_model, solve_security

__all__ = ['FrameworkLimits', 'Configuration', 'IterationRecord', 'RunResult', 'run_framework', 'solve_configuration']
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameworkLimits:
    max_iterations: int = 1000
    wall_budget: float = 600.0
    solver: SolverLimits = field(default_factory=SolverLimits)


@dataclass
class Configuration:
    """A functional routing with the security placements that were chosen for it"""

    functional: FunctionalSolution
    security: SecuritySolution
    risks: FlowRisks
    rules: tuple[SegregationRule, ...] = ()
    classes: dict[str, EquivalenceClass] = field(default_factory=dict)

    @property
    def objectives(self) -> tuple[float, float]:
        return self.functional.objective_no_cut_reward, self.security.objective

    @property
    def overall(self) -> float:
        return sum(self.objectives)

    @property
    def served_flows(self) -> tuple[FlowSpec, ...]:
        return self.security.served_flows

    @property
    def blocked_flows(self) -> tuple[FlowSpec, ...]:
        return self.security.blocked_flows

    def shared_count(self, rule: SegregationRule, classes: dict[str, EquivalenceClass]) -> int:
        return len(shared_nodes(rule, classes, self.functional.active_paths.values()))


@dataclass
class IterationRecord:
    index: int
    func_obj: float
    func_obj_no_reward: float
    sec_obj: float
    overall_obj: float
    network_risk: float
    served_flows: int
    blocked_flows: int
    nodes_explored: int
    firewalls: int = 0
    inspection_posts: int = 0
    trialed_cut: str | None = None
    judgement: Judgement | None = None

    @classmethod
    def for_config(
        cls, index: int, config: Configuration, cut: Cut | None = None, judgement: Judgement | None = None
    ) -> IterationRecord:
        func, sec = config.functional, config.security
        return cls(
            index=index,
            func_obj=func.objective,
            func_obj_no_reward=func.objective_no_cut_reward,
            sec_obj=sec.objective,
            overall_obj=config.overall,
            network_risk=config.risks.total,
            served_flows=len(sec.served_flows),
            blocked_flows=len(sec.blocked_flows),
            nodes_explored=func.nodes_explored + sec.nodes_explored,
            firewalls=len(sec.fw),
            inspection_posts=len(sec.pi),
            trialed_cut=str(cut) if cut else None,
            judgement=judgement,
        )


@dataclass
class RunResult:
    scenario: Scenario
    pool: PathPool
    best: Configuration
    best_index: int
    history: list[IterationRecord]
    snapshots: list[Configuration]
    wall_time: float
    accepted: int = 0
    revoked: int = 0
    cut_log: str = ''
    high_risk_hosts: tuple[str, ...] = ()

    @property
    def first(self) -> Configuration:
        return self.snapshots[0]

    def recovered_hosts(self, config: Configuration | None = None) -> frozenset[str]:
        """Hosts with a flow that was blocked in the first iteration but is served in the given configuration"""
        config = config or self.best
        served = set(config.served_flows)
        hosts = set(self.scenario.hosts)
        recovered = {
            node for flow in self.first.blocked_flows if flow in served for node in flow.pair if node in hosts
        }
        return frozenset(recovered)


def solve_configuration(
    scenario: Scenario,
    pool: PathPool,
    backend: SolverBackend,
    classes: dict[str, EquivalenceClass] | None = None,
    rules: tuple[SegregationRule, ...] = (),
    risk_func: RiskFunction = flow_risk,
) -> Configuration:
    """Solve the functional layer under the given rules, evaluate path risks, and solve the security layer"""
    classes = classes or {}
    func_sol = solve_functional(build_functional_model(scenario, pool, classes, rules), backend)
    risks = compute_risks(scenario, func_sol.active_paths, risk_func)
    sec_sol = solve_security(build_security_model(scenario, func_sol, risks), backend)
    return Configuration(func_sol, sec_sol, risks, tuple(rules), dict(classes))


def run_framework(
    scenario: Scenario,
    backend: SolverBackend | str = 'exact',
    limits: FrameworkLimits = FrameworkLimits(),
    risk_func: RiskFunction = flow_risk,
) -> RunResult:
    """
    :param scenario: A valid scenario
    :param backend: The solver backend (or backend spec, e.g. ``exact`` or ``external:cbc``) to use for both layers
    :param limits: Iteration / wall clock limits, and the solver limits used when a backend spec is provided
    :param risk_func: The per-path risk function
    :return: The best configuration found, along with the full iteration history
    :raises FrameworkAborted: If either layer is infeasible in any iteration
    """
    start = time.monotonic()
    if isinstance(backend, str):
        backend = get_backend(backend, limits.solver)
    log.info(f'Starting framework run with {backend} for {len(scenario.flows)} flows')
    pool = build_pool(scenario)
    arbiter = CutArbiter()

    def solve(iteration: int) -> Configuration:
        try:
            return solve_configuration(scenario, pool, backend, arbiter.classes, arbiter.rules, risk_func)
        except InfeasibleError as e:
            raise FrameworkAborted(iteration, e) from e

    index = 1
    incumbent = best = solve(index)
    best_index = index
    snapshots = [incumbent]
    history = [IterationRecord.for_config(index, incumbent)]
    _log_iteration(history[-1])
    arbiter.seed(generate_candidates(scenario, incumbent.functional, incumbent.security, incumbent.risks))
    trial = arbiter.next_trial()
    while trial is not None:
        if index >= limits.max_iterations:
            log.warning(f'Stopping after reaching the iteration limit={limits.max_iterations}')
            break
        elif (elapsed := time.monotonic() - start) > limits.wall_budget:
            log.warning(f'Stopping after exceeding the wall clock budget={limits.wall_budget}s ({elapsed:.1f}s)')
            break

        index += 1
        config = solve(index)
        classes = arbiter.classes
        displaced = config.shared_count(trial.rule, classes) < incumbent.shared_count(trial.rule, classes)
        judgement = judge_cut(incumbent.objectives, config.objectives, displaced)
        snapshots.append(config)
        history.append(IterationRecord.for_config(index, config, trial, judgement))
        _log_iteration(history[-1])
        if config.overall < best.overall - EPS_IMPROVE:
            best, best_index = config, index
        if judgement == Judgement.BENEFICIAL:
            incumbent = config

        trial = arbiter.step(
            judgement, lambda: generate_candidates(scenario, config.functional, config.security, config.risks)
        )

    wall_time = time.monotonic() - start
    log.info(
        f'Finished after {index} iterations in {wall_time:.2f}s: best iteration={best_index}'
        f' overall={best.overall:.4f} accepted cuts={len(arbiter.accepted)} revoked cuts={len(arbiter.revoked)}'
    )
    return RunResult(
        scenario=scenario,
        pool=pool,
        best=best,
        best_index=best_index,
        history=history,
        snapshots=snapshots,
        wall_time=wall_time,
        accepted=len(arbiter.accepted),
        revoked=len(arbiter.revoked),
        cut_log=arbiter.cut_log(),
        high_risk_hosts=high_risk_hosts(scenario),
    )


def _log_iteration(record: IterationRecord):
    cut = f' cut={record.trialed_cut} -> {record.judgement.value}' if record.trialed_cut else ''
    log.info(
        f'Iteration {record.index}: overall={record.overall_obj:.4f} functional={record.func_obj_no_reward:.4f}'
        f' security={record.sec_obj:.4f} risk={record.network_risk:.2f} served={record.served_flows}'
        f' blocked={record.blocked_flows}{cut}'
    )
