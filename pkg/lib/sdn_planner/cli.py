"""
Command line interface for the SDN configuration planner.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import sys
from abc import ABC
from pathlib import Path
from typing import Sequence

from cli_command_parser import Command, Option, SubCommand, Flag, Counter
from cli_command_parser.exceptions import CommandParserException
from ds_tools.caching.decorators import cached_property

from .exceptions import SdnPlannerError, ScenarioError, InfeasibleError
from .optimkit import SolverLimits, QuadMode, SOLVER_CMD_ENV_VAR
from .optimkit.backends import SolverBackend, get_backend
from .scenario import Scenario, parse_scenario, serialize_scenario

__all__ = ['SdnPlannerCli', 'main']
log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


class SdnPlannerCli(Command, description='Two-layer SDN configuration planner'):
    sub_cmd = SubCommand()
    verbose = Counter('-v', help='Increase logging verbosity (can specify multiple times)')

    def _init_command_(self):
        from ds_tools.logging import init_logging

        init_logging(self.verbose, log_path=None, names=None)


class ScenarioCommand(SdnPlannerCli, ABC):
    scenario_path = Option('--scenario', '-s', metavar='PATH', required=True, help='Path to a scenario file')
    k: int = Option('-k', help='Number of candidate paths per flow endpoint pair (default: from the scenario)')

    @cached_property
    def scenario(self) -> Scenario:
        scenario = parse_scenario(Path(self.scenario_path).expanduser().read_bytes())
        if self.k is not None and self.k < 1:
            raise ScenarioError(f'Invalid k={self.k} - must be at least 1')
        return scenario.with_overrides(paths_per_pair=self.k)


class Run(ScenarioCommand, help='Run the layered optimization and write the report, rules, and DOT files'):
    backend_spec = Option(
        '--backend', '-b', default='exact', help='Solver backend: exact, external, or external:<cbc|highs|gurobi>'
    )
    solver_cmd = Option(
        '--solver-cmd', help=f'External solver command template (default: ${SOLVER_CMD_ENV_VAR} or the solver default)'
    )
    quad = Option('--quad', choices=('native', 'piecewise'), default='piecewise', help='Quadratic term LP encoding')
    breakpoints: int = Option('--breakpoints', default=8, help='Piecewise segments per quadratic term')
    alpha = Option('--alpha', nargs=3, type=float, help='Functional objective weights')
    beta = Option('--beta', nargs=4, type=float, help='Security objective weights')
    output = Option('--output', '-o', metavar='PATH', help='Output directory (default: a per-user cache directory)')
    dot_every_iter = Flag('--dot-every-iter', help='Write an annotated DOT file for every iteration')
    max_iterations: int = Option('--max-iterations', default=1000, help='Maximum number of framework iterations')
    wall_budget: float = Option('--wall-budget', default=600.0, help='Wall clock budget in seconds')
    time_limit: float = Option('--time-limit', default=300.0, help='Time limit per solve in seconds')
    max_binaries: int = Option('--max-binaries', default=25, help='Decision binary limit for the exact backend')

    @cached_property
    def backend(self) -> SolverBackend:
        limits = SolverLimits(time_limit=self.time_limit, max_binaries=self.max_binaries)
        if self.backend_spec.startswith('external'):
            kwargs = {'command': self.solver_cmd, 'quad': QuadMode(self.quad), 'breakpoints': self.breakpoints}
            return get_backend(self.backend_spec, limits, **kwargs)
        return get_backend(self.backend_spec, limits)

    def main(self):
        from ds_tools.fs.paths import validate_or_make_dir, get_user_cache_dir
        from ds_tools.output.table import Table, SimpleColumn
        from .coordinator import FrameworkLimits, run_framework
        from .output import write_outputs, COLUMNS, history_rows

        scenario = self.scenario.with_overrides(alpha=self.alpha or None, beta=self.beta or None)
        limits = FrameworkLimits(self.max_iterations, self.wall_budget, self.backend.limits)
        result = run_framework(scenario, self.backend, limits)

        out_dir = self.output or get_user_cache_dir('sdn_planner/runs')
        validate_or_make_dir(out_dir)
        write_outputs(result, out_dir, self.dot_every_iter)
        Table(*(SimpleColumn(col) for col in COLUMNS), update_width=True).print_rows(history_rows(result.history))
        best = result.best
        print(
            f'\nBest iteration {result.best_index}: served={len(best.served_flows)} blocked={len(best.blocked_flows)}'
            f' beneficial cuts={result.accepted} harmful cuts={result.revoked}; results written to {out_dir}'
        )


class ScenarioWriter(SdnPlannerCli, ABC):
    output = Option('--output', '-o', metavar='PATH', help='Path to write the scenario (default: stdout)')

    def write(self, scenario: Scenario):
        text = serialize_scenario(scenario)
        if self.output:
            path = Path(self.output).expanduser()
            path.parent.mkdir(parents=True, exist_ok=True)
            log.info(f'Writing {path.as_posix()}')
            path.write_text(text, 'utf-8', newline='\n')
        else:
            sys.stdout.write(text)


class GenFatTree(ScenarioWriter, choice='gen-fat-tree', help='Generate the fat-tree data center scenario'):
    order: int = Option('--order', default=4, help='Fat-tree order (even)')
    gateways: int = Option('--gateways', default=2, help='Number of gateways attached to every core switch')
    hosts_per_edge: int = Option('--hosts-per-edge', default=2, help='Hosts attached to each edge switch')
    flows: int = Option('--flows', default=60, help='Total number of flows')
    external: int = Option('--external', default=16, help='Number of flows from gateways to hosts')
    high_risk: int = Option('--high-risk', default=2, help='Number of attacked hosts')
    seed: int = Option('--seed', default=7, help='Random seed for flow and attacked host selection')
    k: int = Option('-k', default=10, help='Number of candidate paths per flow endpoint pair')

    def main(self):
        from .topology import FatTreeSpec, build_fat_tree_scenario

        spec = FatTreeSpec(self.order, self.gateways, self.hosts_per_edge)
        self.write(build_fat_tree_scenario(spec, self.flows, self.external, self.high_risk, self.seed, self.k))


class GenToy(ScenarioWriter, choice='gen-toy', help='Generate the one-gateway / two-switch / four-host scenario'):
    h1_risk: float = Option('--h1-risk', default=10.0, help='Risk of web traffic on the attacked host H1')
    k: int = Option('-k', default=2, help='Number of candidate paths per flow endpoint pair')

    def main(self):
        from .topology import build_toy_scenario

        self.write(build_toy_scenario(self.h1_risk, self.k))


class Validate(ScenarioCommand, help='Validate a scenario file'):
    def main(self):
        scenario = self.scenario
        print(
            f'{self.scenario_path}: OK ({len(scenario.nodes)} nodes, {len(scenario.edges)} edges,'
            f' {len(scenario.flows)} flows)'
        )


class Paths(ScenarioCommand, help='Print the primed candidate path pool'):
    def main(self):
        from .kpaths import build_pool

        sys.stdout.write(build_pool(self.scenario).dump())


def main(argv: Sequence[str] | None = None) -> int:
    """
    :param argv: Command line arguments (default: ``sys.argv[1:]``)
    :return: 0 on success, 1 for usage errors and unusable input, 2 when a model is infeasible
    """
    try:
        SdnPlannerCli.parse_and_run(argv)
    except SystemExit as e:  # the parser exits after printing usage errors and help text
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    except CommandParserException as e:
        print(f'Usage error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as e:
        print(f'Infeasible: {e}', file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as e:
        print(f'Unable to access {e.filename or "file"}: {e.strerror or e}', file=sys.stderr)
        return EXIT_USAGE
    except SdnPlannerError as e:
        print(f'Error: {e}', file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK
