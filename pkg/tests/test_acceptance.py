"""
End-to-end runs: the DDoS walkthrough on the toy topology, its attack-free variant, and the fat-tree experiment.
"""

from __future__ import annotations

import pytest

from sdn_planner.coordinator import FrameworkLimits, run_framework
from sdn_planner.feedback import Judgement
from sdn_planner.optimkit import SolverLimits
from sdn_planner.output import emit_sdn_fragments, render_csv
from sdn_planner.topology import build_toy_scenario, build_fat_tree_scenario


def _switch_of(config, host: str) -> str:
    return next(path.nodes[1] for flow, path in config.functional.active_paths.items() if flow.dst == host)


def test_ddos_host_is_isolated_and_blocked(toy_run):
    best = toy_run.best
    h1_switch = _switch_of(best, 'H1')
    assert {_switch_of(best, host) for host in ('H2', 'H3', 'H4')}.isdisjoint({h1_switch})
    assert len(best.security.fw) == 1
    assert [flow.dst for flow in best.blocked_flows] == ['H1']
    assert sorted(flow.dst for flow in best.served_flows) == ['H2', 'H3', 'H4']
    assert best.overall < toy_run.first.overall


def test_ddos_first_iteration_blocks_a_neighbor(toy_run):
    first = toy_run.first
    assert len(first.blocked_flows) == 2
    assert 'H1' in {flow.dst for flow in first.blocked_flows}


def test_attack_free_variant_needs_no_defenses():
    result = run_framework(build_toy_scenario(h1_risk=1))
    best = result.best
    assert best.security.fw == frozenset()
    assert best.security.pi == frozenset()
    assert len(best.served_flows) == 4
    assert 'drop' not in emit_sdn_fragments(result)


def test_runs_are_deterministic(toy_run):
    again = run_framework(build_toy_scenario())
    assert render_csv(again) == render_csv(toy_run)
    assert again.cut_log == toy_run.cut_log
    assert emit_sdn_fragments(again) == emit_sdn_fragments(toy_run)


def _incumbent_chain(result):
    """The first iteration followed by every iteration whose cut was accepted"""
    return [result.history[0], *(record for record in result.history[1:] if record.judgement == Judgement.BENEFICIAL)]


def _run_fat_tree(solver: str, paths_per_pair: int = 10):
    scenario = build_fat_tree_scenario(paths_per_pair=paths_per_pair)
    limits = FrameworkLimits(max_iterations=50, wall_budget=1800, solver=SolverLimits(time_limit=120))
    return run_framework(scenario, solver, limits)


@pytest.mark.slow
@pytest.mark.solver
def test_fat_tree_experiment(external_solver):
    result = _run_fat_tree(external_solver)
    scenario, best = result.scenario, result.best
    assert result.best.overall <= result.first.overall + 1e-6
    assert len(best.served_flows) + len(best.blocked_flows) == len(scenario.flows)
    assert result.accepted + result.revoked == len(result.history) - 1
    assert len(result.high_risk_hosts) == 2

    attacked = set(result.high_risk_hosts)
    touching = {flow for flow in scenario.flows if attacked.intersection(flow.pair)}
    assert set(best.blocked_flows) == touching
    assert set(best.served_flows) == set(scenario.flows) - touching

    fw = best.security.fw
    paths = best.functional.active_paths
    defended = [
        node
        for node in (node.id for node in scenario.nodes if scenario.is_placeable(node.id))
        if all(node in paths[flow].nodes and {(node, flow.ttype), (node, '*')} & fw for flow in best.blocked_flows)
    ]
    assert defended


@pytest.mark.slow
@pytest.mark.solver
def test_fat_tree_served_flows_grow_along_accepted_cuts(external_solver):
    result = _run_fat_tree(external_solver)
    chain = _incumbent_chain(result)
    served = [record.served_flows for record in chain]
    assert served == sorted(served)
    assert chain[-1].network_risk >= chain[0].network_risk - 1e-6


@pytest.mark.slow
@pytest.mark.solver
def test_fat_tree_more_paths_serve_the_same_flows(external_solver):
    served = [set(_run_fat_tree(external_solver, k).best.served_flows) for k in (10, 20)]
    assert served[0] == served[1]
