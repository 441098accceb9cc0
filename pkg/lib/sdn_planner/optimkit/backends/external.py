"""
File-based bridge to external MILP solvers: the model is written in LP format, the solver is run as a subprocess, and
its solution file is parsed back and re-verified in process.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import os
import shlex
import shutil
import subprocess
from pathlib import Path
from tempfile import TemporaryDirectory

from ...exceptions import SolverError, SolverNotFound
from ..lp_format import QuadMode, write_lp, DEFAULT_BREAKPOINTS
from ..model import ModelIR, Solution, SolveStatus, SolverLimits
from ..solutions import SolutionReader
from .base import SolverBackend

__all__ = ['ExternalBackend', 'SOLVER_CMD_ENV_VAR']
log = logging.getLogger(__name__)

SOLVER_CMD_ENV_VAR = 'DOCSDN_SOLVER_CMD'


class ExternalBackend(SolverBackend, name='external'):
    """
    :param limits: Solver limits; ``time_limit`` is passed to the solver through the ``{time_limit}`` placeholder
    :param option: Name of a known solver (``cbc``, ``highs``, ``gurobi``) whose default command should be used
    :param command: Solver command template with ``{model}`` and ``{solution}`` placeholders.  Defaults to the value
      of the ``DOCSDN_SOLVER_CMD`` environment variable, then to the default command for ``option``.
    :param quad: How quadratic objective terms should be written (``native`` or ``piecewise``)
    :param breakpoints: Number of piecewise segments per quadratic term
    """

    def __init__(
        self,
        limits: SolverLimits | None = None,
        option: str | None = None,
        command: str | None = None,
        quad: QuadMode | str = QuadMode.PIECEWISE,
        breakpoints: int = DEFAULT_BREAKPOINTS,
    ):
        super().__init__(limits)
        if command:
            self.command = command
        elif env_command := os.environ.get(SOLVER_CMD_ENV_VAR):
            self.command = env_command
        elif option:
            self.command = SolutionReader.for_solver(option).command
        else:
            raise SolverError(
                f'No external solver command was configured - provide one via --solver-cmd or {SOLVER_CMD_ENV_VAR}'
            )
        self.reader = SolutionReader.for_solver(option) if option else SolutionReader.for_command(self.command)
        self.quad = QuadMode(quad)
        self.breakpoints = breakpoints

    def __repr__(self) -> str:
        return f'<{self.__class__.__name__}[{self.command!r}, reader={self.reader.solver}, quad={self.quad.value}]>'

    def _build_args(self, model_path: Path, solution_path: Path) -> list[str]:
        fmt_kwargs = {
            'model': model_path.as_posix(),
            'solution': solution_path.as_posix(),
            'time_limit': int(self.limits.time_limit),
        }
        try:
            args = [part.format(**fmt_kwargs) for part in shlex.split(self.command)]
        except (KeyError, IndexError, ValueError) as e:
            raise SolverError(f'Invalid solver command template={self.command!r}: {e}') from e
        if not args or shutil.which(args[0]) is None:
            raise SolverNotFound(self.command)
        return args

    def _solve(self, model: ModelIR) -> Solution:
        lp = write_lp(model, self.quad, self.breakpoints)
        with TemporaryDirectory(prefix='sdn_planner_') as tmp_dir:
            model_path = Path(tmp_dir, f'{model.name}.lp')
            solution_path = Path(tmp_dir, f'{model.name}.sol')
            model_path.write_text(lp.text, 'utf-8')
            args = self._build_args(model_path, solution_path)
            log.info(f'Running external solver: {shlex.join(args)}')
            try:
                proc = subprocess.run(args, capture_output=True, text=True, timeout=self.limits.time_limit + 60)
            except subprocess.TimeoutExpired as e:
                raise SolverError(f'External solver did not finish within {self.limits.time_limit + 60}s') from e
            except OSError as e:
                raise SolverNotFound(self.command) from e

            output = f'{proc.stdout or ""}{proc.stderr or ""}'
            log.debug(f'External solver exited with code={proc.returncode}')
            if not solution_path.exists() or not solution_path.stat().st_size:
                if 'infeasible' in output.lower():
                    return Solution(SolveStatus.INFEASIBLE, log=output)
                raise SolverError(
                    f'External solver exited with code={proc.returncode} without writing a solution:\n{output[-2000:]}'
                )
            parsed = self.reader.read(solution_path)

        if parsed.status == SolveStatus.INFEASIBLE:
            return Solution(SolveStatus.INFEASIBLE, log=output)

        values = {}
        for name, var in lp.names.items():
            value = parsed.values.get(name, 0.0)
            if var.is_binary and abs(value - round(value)) <= self.limits.eps_int:
                value = float(round(value))
            values[var] = value
        return Solution(parsed.status, values, parsed.objective, approximation_bound=lp.approximation_bound, log=output)
