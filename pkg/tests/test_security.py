from __future__ import annotations

from dataclasses import replace
from itertools import product

import pytest

from sdn_planner.exceptions import RiskError
from sdn_planner.functional import FunctionalSolution
from sdn_planner.kpaths import Path
from sdn_planner.risk import FlowRisks, compute_risks
from sdn_planner.scenario import Weights
from sdn_planner.security import build_security_model, solve_security, risk_factor, BREAKDOWN


@pytest.fixture
def shared_routing(toy_scenario, route_toy) -> FunctionalSolution:
    return route_toy(toy_scenario, {'H1': 'S1', 'H2': 'S1', 'H3': 'S2', 'H4': 'S2'})


@pytest.fixture
def isolated_routing(toy_scenario, route_toy) -> FunctionalSolution:
    return route_toy(toy_scenario, {'H1': 'S1', 'H2': 'S2', 'H3': 'S2', 'H4': 'S2'})


def test_defense_variables(toy_scenario, shared_routing):
    risks = compute_risks(toy_scenario, shared_routing.active_paths)
    smodel = build_security_model(toy_scenario, shared_routing, risks)
    assert sorted(smodel.fw) == [('S1', '*'), ('S1', 'web'), ('S2', '*'), ('S2', 'web')]
    assert sorted(smodel.pi) == ['S1', 'S2']
    assert len(smodel.model.decision_binaries) == 6
    assert any(c.name == 'memory[S1]' for c in smodel.model.constraints)
    penalties = {flow.dst: value for flow, value in smodel.penalty.items()}
    assert penalties == {'H1': 1, 'H2': pytest.approx(25.75), 'H3': pytest.approx(25.75), 'H4': pytest.approx(25.75)}


def test_memory_limits_defenses(toy_scenario, shared_routing):
    costs = replace(toy_scenario.costs, fw_cost={'web': 1.0, '*': 5.0}, pi_cost=5.0)
    scenario = replace(toy_scenario, costs=costs)
    smodel = build_security_model(scenario, shared_routing, compute_risks(scenario, shared_routing.active_paths))
    assert sorted(smodel.fw) == [('S1', 'web'), ('S2', 'web')]
    assert smodel.pi == {}


def test_collateral_blocking(toy_scenario, shared_routing, exact_backend):
    risks = compute_risks(toy_scenario, shared_routing.active_paths)
    sol = solve_security(build_security_model(toy_scenario, shared_routing, risks), exact_backend)
    assert [node for node, _ in sol.fw] == ['S1']
    assert sol.pi == frozenset()
    assert {flow.dst for flow in sol.blocked_flows} == {'H1', 'H2'}
    assert {flow.dst for flow in sol.served_flows} == {'H3', 'H4'}
    assert sol.objective == pytest.approx(91.25, abs=1e-5)
    assert list(sol.breakdown) == list(BREAKDOWN)
    assert sol.breakdown['complexity'] == pytest.approx(3)
    assert sol.breakdown['blocking'] == pytest.approx(26.75)
    assert sol.breakdown['residual_risk'] == pytest.approx(61.5)
    rf = {flow.dst: value for flow, value in sol.rf.items()}
    assert rf == {'H1': 0.5, 'H2': 0.5, 'H3': 1.0, 'H4': 1.0}


def test_isolated_attacker(toy_scenario, isolated_routing, exact_backend):
    risks = compute_risks(toy_scenario, isolated_routing.active_paths)
    sol = solve_security(build_security_model(toy_scenario, isolated_routing, risks), exact_backend)
    assert {flow.dst for flow in sol.blocked_flows} == {'H1'}
    assert sol.objective == pytest.approx(67.5, abs=1e-5)


def test_no_defenses_without_attack(recovered_toy_scenario, exact_backend, route_toy):
    routing = route_toy(recovered_toy_scenario, {'H1': 'S1', 'H2': 'S1', 'H3': 'S2', 'H4': 'S2'})
    risks = compute_risks(recovered_toy_scenario, routing.active_paths)
    sol = solve_security(build_security_model(recovered_toy_scenario, routing, risks), exact_backend)
    assert sol.fw == frozenset()
    assert sol.pi == frozenset()
    assert sol.blocked_flows == ()
    assert sol.objective == pytest.approx(16)


def test_zero_residual_weight(toy_scenario, shared_routing, exact_backend):
    scenario = replace(toy_scenario, weights=Weights(beta=(1.0, 0.01, 1.0, 0.0)))
    smodel = build_security_model(scenario, shared_routing, compute_risks(scenario, shared_routing.active_paths))
    assert set(smodel.rf.values()) == {1.0}
    assert smodel.rm_fw == {}
    sol = solve_security(smodel, exact_backend)
    assert sol.fw == frozenset()
    assert sol.objective == pytest.approx(0)


def test_missing_risk(toy_scenario, shared_routing):
    risks = compute_risks(toy_scenario, shared_routing.active_paths)
    partial = FlowRisks(risks.topology, risks.paths, dict(list(risks.values.items())[:2]))
    with pytest.raises(RiskError):
        build_security_model(toy_scenario, shared_routing, partial)


def test_report(toy_scenario, shared_routing, exact_backend):
    risks = compute_risks(toy_scenario, shared_routing.active_paths)
    lines = solve_security(build_security_model(toy_scenario, shared_routing, risks), exact_backend).report()
    lines = lines.splitlines()
    assert lines[0] in ('fw S1 web', 'fw S1 *')
    assert 'blocked G1 H1 web' in lines
    assert 'objective_complexity 3' in lines
    assert lines[-1] == 'objective 91.25'


class TestRiskFactor:
    path = Path(0, ('G1', 'S1', 'H1'), 2)

    def test_undefended(self):
        assert risk_factor(self.path, 'web', frozenset(), frozenset()) == 1

    def test_firewall_decays_with_distance_from_the_source(self):
        assert risk_factor(self.path, 'web', frozenset({('G1', 'web')}), frozenset()) == 0
        assert risk_factor(self.path, 'web', frozenset({('S1', '*')}), frozenset()) == 0.5
        assert risk_factor(self.path, 'web', frozenset({('H1', 'web')}), frozenset()) == 0.75

    def test_other_types_are_ignored(self):
        assert risk_factor(self.path, 'web', frozenset({('S1', 'ftp')}), frozenset()) == 1

    def test_inspection(self):
        assert risk_factor(self.path, 'web', frozenset(), frozenset({'S1'})) == pytest.approx(0.95)
        assert risk_factor(self.path, 'web', frozenset({('H1', 'web')}), frozenset({'G1'})) == 0.75



def _placement_options(scenario) -> list[list[tuple[frozenset, frozenset]]]:
    """Every memory-feasible set of defenses per placeable node, as (firewalls, inspection posts) pairs"""
    costs = scenario.costs
    per_node = []
    for node in sorted(scenario.node_map):
        if not scenario.is_placeable(node):
            continue
        mem = scenario.node_map[node].mem
        items = [('fw', ttype) for ttype in (*scenario.traffic_types, '*') if scenario.fw_cost(ttype) <= mem]
        if costs.pi_cost <= mem:
            items.append(('pi', None))
        options = []
        for bits in product((0, 1), repeat=len(items)):
            chosen = [item for item, bit in zip(items, bits) if bit]
            used = sum(scenario.fw_cost(t) if kind == 'fw' else costs.pi_cost for kind, t in chosen)
            if used <= mem:
                fw = frozenset((node, t) for kind, t in chosen if kind == 'fw')
                pi = frozenset(node for kind, _ in chosen if kind == 'pi')
                options.append((fw, pi))
        per_node.append(options)
    return per_node


def _best_placement_objective(scenario, routing: FunctionalSolution, risks: FlowRisks) -> float:
    beta0, beta1, beta2, beta3 = scenario.weights.beta
    costs = scenario.costs
    scale = costs.penalty_scale if costs.penalty_scale is not None else risks.max
    best = float('inf')
    for combo in product(*_placement_options(scenario)):
        fw = frozenset().union(*(f for f, _ in combo))
        pi = frozenset().union(*(p for _, p in combo))
        value = beta0 * (costs.fw_comp * len(fw) + costs.pi_comp * len(pi))
        value += beta1 * sum(routing.loads.get(node, 0.0) for node in pi)
        for flow, path in routing.active_paths.items():
            risk = risks[flow]
            if any((node, flow.ttype) in fw or (node, '*') in fw for node in path.nodes):
                value += beta2 * scale / risk * routing.flows[flow]
            value += beta3 * risk * risk_factor(path, flow.ttype, fw, pi)
        best = min(best, value)
    return best


@pytest.mark.parametrize('hosts_on_s1', [('H1', 'H2'), ('H1',), ('H1', 'H2', 'H3')])
def test_placement_matches_enumeration(toy_scenario, route_toy, exact_backend, hosts_on_s1):
    routing = route_toy(toy_scenario, {f'H{i}': 'S1' if f'H{i}' in hosts_on_s1 else 'S2' for i in range(1, 5)})
    risks = compute_risks(toy_scenario, routing.active_paths)
    sol = solve_security(build_security_model(toy_scenario, routing, risks), exact_backend)
    assert sol.objective == pytest.approx(_best_placement_objective(toy_scenario, routing, risks), abs=1e-5)


def test_no_blocking_penalty_blocks_everything_at_the_gateway(toy_scenario, route_toy, exact_backend):
    nodes = tuple(replace(node, mem=2.0) if node.id == 'G1' else node for node in toy_scenario.nodes)
    scenario = replace(toy_scenario, nodes=nodes, weights=Weights(beta=(1.0, 0.01, 0.0, 1.0)))
    routing = route_toy(scenario, {'H1': 'S1', 'H2': 'S1', 'H3': 'S2', 'H4': 'S2'})
    risks = compute_risks(scenario, routing.active_paths)
    sol = solve_security(build_security_model(scenario, routing, risks), exact_backend)
    assert {node for node, _ in sol.fw} == {'G1'}
    assert len(sol.blocked_flows) == 4
    assert set(sol.rf.values()) == {0.0}
    assert sol.objective == pytest.approx(3, abs=1e-5)
    assert sol.objective == pytest.approx(_best_placement_objective(scenario, routing, risks), abs=1e-5)
