"""
Readers for the solution files written by external MILP solvers.

Each reader registers itself under the name of the solver program it understands; the plain ``<name> <value>``
reader is used for any unrecognized program.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import re
import shlex
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Type

from ..exceptions import SolverError
from .model import SolveStatus

__all__ = ['ParsedSolution', 'SolutionReader', 'PlainReader', 'CbcReader', 'HighsReader', 'GurobiReader']
log = logging.getLogger(__name__)


@dataclass
class ParsedSolution:
    status: SolveStatus
    values: dict[str, float] = field(default_factory=dict)
    objective: float | None = None


class SolutionReader(ABC):
    solver: str = None
    #: Default command template for this solver, formatted with ``{model}``, ``{solution}``, and ``{time_limit}``
    command: str = None
    _solver_class_map: dict[str, Type[SolutionReader]] = {}

    def __init_subclass__(cls, solver: str = None, command: str = None, **kwargs):
        super().__init_subclass__(**kwargs)
        if solver:
            cls._solver_class_map[solver] = cls
            cls.solver = solver
        if command:
            cls.command = command

    @classmethod
    def for_solver(cls, solver: str) -> SolutionReader:
        try:
            return cls._solver_class_map[solver]()
        except KeyError as e:
            names = ', '.join(cls.solver_names())
            raise SolverError(f'Unsupported solver={solver!r} - expected one of: {names}') from e

    @classmethod
    def for_command(cls, command: str) -> SolutionReader:
        """Pick the reader matching the program in the given command template, falling back to the plain reader"""
        try:
            program = Path(shlex.split(command)[0]).name
        except (ValueError, IndexError):
            return PlainReader()
        program = program.lower().removesuffix('.exe')
        for solver, reader_cls in cls._solver_class_map.items():
            if program.startswith(solver):
                return reader_cls()
        return PlainReader()

    @classmethod
    def solver_names(cls) -> list[str]:
        return sorted(cls._solver_class_map)

    def read(self, path: Path) -> ParsedSolution:
        text = path.read_text('utf-8', errors='replace')
        log.debug(f'Parsing {self.solver} solution file with {len(text.splitlines())} lines')
        return self.parse(text)

    @abstractmethod
    def parse(self, text: str) -> ParsedSolution:
        raise NotImplementedError

    @classmethod
    def _pairs(cls, lines: Iterable[str]) -> dict[str, float]:
        values = {}
        for line in lines:
            if not (line := line.strip()) or line.startswith('#'):
                continue
            try:
                name, value = line.split()[:2]
                values[name] = float(value)
            except ValueError:
                log.debug(f'Ignoring unexpected solution line: {line!r}')
        return values


class PlainReader(SolutionReader, solver='plain'):
    """``<varname> <value>`` lines; blank lines and ``#`` comments are ignored"""

    def parse(self, text: str) -> ParsedSolution:
        values = self._pairs(text.splitlines())
        return ParsedSolution(SolveStatus.OPTIMAL if values else SolveStatus.INFEASIBLE, values)


class GurobiReader(
    SolutionReader, solver='gurobi', command='gurobi_cl TimeLimit={time_limit} ResultFile={solution} {model}'
):
    _objective_match = re.compile(r'#\s*Objective value\s*=\s*(\S+)', re.IGNORECASE).match

    def parse(self, text: str) -> ParsedSolution:
        lines = text.splitlines()
        objective = None
        for line in lines:
            if m := self._objective_match(line.strip()):
                objective = float(m.group(1))
                break
        values = self._pairs(lines)
        # Gurobi does not write a result file for infeasible models, so any parsed content means a solution was found
        return ParsedSolution(SolveStatus.OPTIMAL if values else SolveStatus.INFEASIBLE, values, objective)


class CbcReader(SolutionReader, solver='cbc', command='cbc {model} sec {time_limit} solve solu {solution}'):
    """
    The first line holds the status, e.g. ``Optimal - objective value 3.00000000``; each following row holds the
    column index, name, value, and reduced cost.  Rows may be prefixed with ``**`` when infeasible.
    """

    _objective_search = re.compile(r'objective value\s+(\S+)', re.IGNORECASE).search

    def parse(self, text: str) -> ParsedSolution:
        lines = text.splitlines()
        if not lines:
            raise SolverError('Empty CBC solution file')

        header = lines[0].strip().lower()
        if header.startswith('optimal'):
            status = SolveStatus.OPTIMAL
        elif 'infeasible' in header or 'unbounded' in header:
            return ParsedSolution(SolveStatus.INFEASIBLE)
        elif header.startswith('stopped'):
            status = SolveStatus.LIMIT
        else:
            raise SolverError(f'Unexpected CBC solution status line: {lines[0]!r}')

        m = self._objective_search(lines[0])
        objective = float(m.group(1)) if m else None
        values = {}
        for line in lines[1:]:
            parts = line.replace('**', ' ').split()
            if len(parts) >= 3:
                try:
                    values[parts[1]] = float(parts[2])
                except ValueError:
                    log.debug(f'Ignoring unexpected CBC solution line: {line!r}')
        return ParsedSolution(status, values, objective)


class HighsReader(
    SolutionReader,
    solver='highs',
    command='highs --model_file {model} --solution_file {solution} --time_limit {time_limit}',
):
    _statuses = {
        'optimal': SolveStatus.OPTIMAL,
        'infeasible': SolveStatus.INFEASIBLE,
        'primal infeasible or unbounded': SolveStatus.INFEASIBLE,
        'unbounded': SolveStatus.INFEASIBLE,
        'time limit reached': SolveStatus.LIMIT,
        'iteration limit reached': SolveStatus.LIMIT,
        'interrupted by user': SolveStatus.LIMIT,
    }

    def parse(self, text: str) -> ParsedSolution:
        lines = [line.strip() for line in text.splitlines()]
        status = self._parse_status(lines)
        if status == SolveStatus.INFEASIBLE:
            return ParsedSolution(status)

        objective = None
        values = {}
        for i, line in enumerate(lines):
            if line.startswith('Objective') and objective is None:
                try:
                    objective = float(line.split()[-1])
                except ValueError:
                    pass
            elif line.startswith('# Columns'):
                count = int(line.split()[-1])
                values = self._pairs(lines[i + 1 : i + 1 + count])
                break
        return ParsedSolution(status, values, objective)

    def _parse_status(self, lines: list[str]) -> SolveStatus:
        try:
            index = lines.index('Model status')
        except ValueError:
            raise SolverError('HiGHS solution file did not contain a model status') from None
        for line in lines[index + 1 :]:
            if line:
                try:
                    return self._statuses[line.lower()]
                except KeyError:
                    raise SolverError(f'Unexpected HiGHS model status: {line!r}') from None
        raise SolverError('HiGHS solution file did not contain a model status')
