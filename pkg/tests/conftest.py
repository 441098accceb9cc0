from __future__ import annotations

import math
import os
import random
import shutil
from itertools import product
from typing import Callable, Iterable

import pytest

from sdn_planner.coordinator import RunResult, run_framework
from sdn_planner.functional import FunctionalSolution
from sdn_planner.kpaths import build_pool
from sdn_planner.optimkit import ExactBackend, LinExpr, ModelIR, Relation, SolverLimits, SOLVER_CMD_ENV_VAR
from sdn_planner.scenario import Scenario, Node, Edge, NodeKind, FlowSpec, RiskModel, SecurityCosts, Weights
from sdn_planner.topology import build_toy_scenario

ScenarioFactory = Callable[..., Scenario]


@pytest.fixture
def toy_scenario() -> Scenario:
    return build_toy_scenario()


@pytest.fixture
def recovered_toy_scenario() -> Scenario:
    return build_toy_scenario(h1_risk=1)


@pytest.fixture
def exact_backend() -> ExactBackend:
    return ExactBackend(SolverLimits(time_limit=60))


@pytest.fixture
def line_scenario() -> ScenarioFactory:
    """
    Factory for small scenarios over a chain of nodes.  The first and last nodes are hosts unless ``kinds`` says
    otherwise; every other node is a switch with ``mem`` memory.
    """

    def make(
        chain: Iterable[str] = ('a', 'b', 'c'),
        flows: Iterable[tuple[str, str, str, float]] = (('a', 'c', 'T', 1.0),),
        risk: dict[tuple[str, str], float] | None = None,
        capacity: float = 10.0,
        mem: float = 4.0,
        extra_edges: Iterable[tuple[str, str]] = (),
        kinds: dict[str, NodeKind] | None = None,
        radius: int = 2,
        **kwargs,
    ) -> Scenario:
        chain = list(chain)
        kinds = kinds or {}
        nodes = []
        for i, node in enumerate(chain):
            kind = kinds.get(node, NodeKind.HOST if i in (0, len(chain) - 1) else NodeKind.SWITCH)
            nodes.append(Node(node, kind, mem if kind != NodeKind.HOST else 0.0))
        edges = [Edge(u, v, capacity) for u, v in zip(chain, chain[1:])]
        edges.extend(Edge(u, v, capacity) for u, v in extra_edges)
        flow_specs = tuple(FlowSpec(*flow) for flow in flows)
        types = tuple(dict.fromkeys(flow.ttype for flow in flow_specs)) or ('T',)
        kwargs.setdefault('costs', SecurityCosts(fw_cost={t: 1.0 for t in types}))
        kwargs.setdefault('weights', Weights())
        return Scenario(
            nodes=tuple(nodes),
            edges=tuple(edges),
            traffic_types=types,
            flows=flow_specs,
            risk=RiskModel(risk or {}, radius),
            **kwargs,
        )

    return make


def _solver_command() -> str | None:
    if command := os.environ.get(SOLVER_CMD_ENV_VAR):
        return command
    for program in ('cbc', 'highs'):
        if shutil.which(program):
            return program
    return None


@pytest.fixture
def external_solver() -> str:
    """The backend spec for an available external MILP solver; tests using it are skipped when none is installed"""
    if (found := _solver_command()) is None:
        pytest.skip('No external MILP solver is available')
    return 'external' if found not in ('cbc', 'highs') else f'external:{found}'


@pytest.fixture
def route_toy() -> Callable[..., FunctionalSolution]:
    """Factory for fixed toy routings, given the switch that each host's flow should cross"""

    def route(scenario: Scenario, switches: dict[str, str]) -> FunctionalSolution:
        pool = build_pool(scenario)
        paths, loads = {}, {node.id: 0.0 for node in scenario.nodes}
        for flow in scenario.flows:
            candidates = pool.for_pair(flow.src, flow.dst)
            path = paths[flow] = next(p for p in candidates if p.nodes[1] == switches[flow.dst])
            for node in path.nodes:
                loads[node] += flow.demand
        flows = {flow: flow.demand for flow in scenario.flows}
        return FunctionalSolution(paths, flows, loads, 0, 0.0, 0.0)

    return route


@pytest.fixture(scope='session')
def toy_run() -> RunResult:
    """The complete framework run on the toy scenario (shared across tests; treat it as read-only)"""
    return run_framework(build_toy_scenario(), ExactBackend(SolverLimits(time_limit=60)))


@pytest.fixture
def quadratic_instance() -> Callable[[int], tuple[ModelIR, float]]:
    """
    Factory for seeded random mixed-binary models with convex quadratic terms, returned with their optimum.

    Each model has 6-12 binaries under a knapsack row and a cardinality row, plus a continuous ``y`` in ``[0, 4]``
    that must cover the number of chosen binaries among the first three.  The optimum is found by enumerating every
    binary assignment and minimizing the one-dimensional quadratic in ``y`` in closed form.
    """

    def make(seed: int) -> tuple[ModelIR, float]:
        rng = random.Random(seed)
        n = rng.randint(6, 12)
        weights = [rng.randint(1, 5) for _ in range(n)]
        capacity = sum(weights) // 2
        linear = [rng.randint(-10, 5) for _ in range(n)]
        quad = [rng.choice((0, 0.5, 1, 2, 3)) for _ in range(n)]
        y_linear, y_quad = rng.uniform(-6, 2), rng.uniform(0.5, 2)

        model = ModelIR(f'random_{seed}')
        xs = [model.add_binary(f'x{i}') for i in range(n)]
        y = model.add_continuous('y', 0, 4)
        model.add_constraint(LinExpr.sum(w * x for w, x in zip(weights, xs)), Relation.LE, capacity, 'capacity')
        model.add_constraint(LinExpr.sum(xs), Relation.GE, 2, 'at_least_two')
        model.add_constraint(y - LinExpr.sum(xs[:3]), Relation.GE, 0, 'cover')
        model.minimize(LinExpr.sum(c * x for c, x in zip(linear, xs)) + y_linear * y)
        for coef, x in zip(quad, xs):
            model.add_quadratic(coef, x)
        model.add_quadratic(y_quad, y)

        best = math.inf
        for bits in product((0, 1), repeat=n):
            if sum(w * b for w, b in zip(weights, bits)) > capacity or sum(bits) < 2:
                continue
            y_value = min(max(-y_linear / (2 * y_quad), sum(bits[:3])), 4)
            value = sum((c + q) * b for c, q, b in zip(linear, quad, bits))
            best = min(best, value + y_linear * y_value + y_quad * y_value**2)
        return model, best

    return make
