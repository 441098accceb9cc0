from __future__ import annotations

from dataclasses import replace

import pytest

from sdn_planner.coordinator import FrameworkLimits, run_framework, solve_configuration
from sdn_planner.exceptions import FrameworkAborted
from sdn_planner.feedback import Judgement
from sdn_planner.kpaths import build_pool
from sdn_planner.scenario import FlowSpec
from sdn_planner.topology import gen_toy


def _switch(config, host: str) -> str:
    return next(path.nodes[1] for flow, path in config.functional.active_paths.items() if flow.dst == host)


def test_single_configuration(toy_scenario, exact_backend):
    config = solve_configuration(toy_scenario, build_pool(toy_scenario), exact_backend)
    assert config.functional.objective == pytest.approx(8.28, abs=1e-5)
    assert config.security.objective == pytest.approx(91.25, abs=1e-5)
    assert config.overall == pytest.approx(99.53, abs=1e-5)
    assert config.risks.total == 115
    assert len(config.blocked_flows) == 2
    assert config.rules == ()


class TestToyRun:
    def test_iterations(self, toy_run):
        history = toy_run.history
        assert [record.index for record in history] == [1, 2, 3, 4]
        assert history[0].trialed_cut is None
        assert history[0].judgement is None
        assert [record.judgement for record in history[1:]] == [Judgement.BENEFICIAL] * 3
        assert all(record.trialed_cut.startswith('(H1)x(H') for record in history[1:])
        assert [record.overall_obj for record in history] == pytest.approx([99.53, 99.53, 99.53, 75.8], abs=1e-4)
        assert [record.blocked_flows for record in history] == [2, 2, 2, 1]

    def test_best_configuration(self, toy_run):
        assert toy_run.best_index == 4
        best = toy_run.best
        h1_switch = _switch(best, 'H1')
        assert all(_switch(best, host) != h1_switch for host in ('H2', 'H3', 'H4'))
        assert [node for node, _ in best.security.fw] == [h1_switch]
        assert [flow.dst for flow in best.blocked_flows] == ['H1']
        assert best.functional.objective_no_cut_reward == pytest.approx(8.30, abs=1e-5)
        assert best.security.objective == pytest.approx(67.5, abs=1e-5)

    def test_cut_bookkeeping(self, toy_run):
        assert toy_run.accepted == 3
        assert toy_run.revoked == 0
        assert len(toy_run.cut_log.splitlines()) == 3
        assert toy_run.high_risk_hosts == ('H1',)
        assert len(toy_run.snapshots) == 4
        assert toy_run.first is toy_run.snapshots[0]

    def test_recovered_hosts(self, toy_run):
        first_blocked = {flow.dst for flow in toy_run.first.blocked_flows} - {'H1'}
        assert len(first_blocked) == 1
        assert toy_run.recovered_hosts() == first_blocked
        assert toy_run.recovered_hosts(toy_run.first) == frozenset()


def test_attack_free_run_converges_immediately(recovered_toy_scenario):
    result = run_framework(recovered_toy_scenario)
    assert len(result.history) == 1
    assert result.best_index == 1
    assert result.best.security.fw == frozenset()
    assert result.best.blocked_flows == ()
    assert result.cut_log == ''


def test_iteration_limit(toy_scenario):
    result = run_framework(toy_scenario, limits=FrameworkLimits(max_iterations=2))
    assert len(result.history) == 2
    assert result.accepted == 1


def test_wall_budget(toy_scenario):
    result = run_framework(toy_scenario, limits=FrameworkLimits(wall_budget=0))
    assert len(result.history) == 1


def test_infeasible_run_is_aborted(toy_scenario):
    _, edges = gen_toy(capacity=1.0)
    scenario = replace(toy_scenario, edges=edges, flows=(FlowSpec('G1', 'H1', 'web', 5.0),))
    with pytest.raises(FrameworkAborted) as exc_info:
        run_framework(scenario)
    assert exc_info.value.iteration == 1
    assert exc_info.value.layer == 'functional'
    assert str(exc_info.value).startswith('Iteration 1 aborted')


def test_custom_risk_function(toy_scenario):
    def uniform(scenario, topology, path, ttype):
        return 1.0

    result = run_framework(toy_scenario, risk_func=uniform)
    assert result.best.risks.total == 4
    assert result.best.blocked_flows == ()
