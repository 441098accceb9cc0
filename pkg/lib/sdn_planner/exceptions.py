"""
Exceptions raised by the planner.

:author: Doug Skrypa
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Iterable

if TYPE_CHECKING:
    from .scenario import Violation

__all__ = [
    'SdnPlannerError',
    'ScenarioError',
    'ScenarioSyntaxError',
    'ScenarioSemanticError',
    'TopologyError',
    'NoPathError',
    'ModelError',
    'SolverError',
    'SolverNotFound',
    'SolverGuardError',
    'SolutionVerificationError',
    'InfeasibleError',
    'RiskError',
    'FrameworkAborted',
]


class SdnPlannerError(Exception):
    """Base class for all planner errors"""


class ScenarioError(SdnPlannerError):
    pass


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(msg)
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f'{self.args[0]} (line {self.line}, column {self.column})'


class ScenarioSemanticError(ScenarioError):
    def __init__(self, msg: str, violations: Iterable[Violation] = ()):
        super().__init__(msg)
        self.violations = list(violations)

    def __str__(self) -> str:
        if not self.violations:
            return self.args[0]
        details = '\n'.join(f'  - {v}' for v in self.violations)
        return f'{self.args[0]}:\n{details}'


class TopologyError(SdnPlannerError, ValueError):
    pass


class NoPathError(SdnPlannerError):
    def __init__(self, flow: Any):
        super().__init__(f'No physical path exists for flow {flow}')
        self.flow = flow


class ModelError(SdnPlannerError, ValueError):
    pass


class SolverError(SdnPlannerError):
    pass


class SolverNotFound(SolverError):
    def __init__(self, command: str):
        super().__init__(f'Unable to find solver executable for command: {command!r}')
        self.command = command


class SolverGuardError(SolverError):
    def __init__(self, count: int, limit: int):
        super().__init__(f'Model has {count} decision binaries, but the exact backend is limited to {limit}')
        self.count = count
        self.limit = limit


class SolutionVerificationError(SolverError):
    def __init__(self, msg: str, violations: list[str]):
        super().__init__(msg)
        self.violations = violations

    def __str__(self) -> str:
        shown = '\n'.join(f'  - {v}' for v in self.violations[:10])
        more = f'\n  ... and {len(self.violations) - 10} more' if len(self.violations) > 10 else ''
        return f'{self.args[0]}:\n{shown}{more}'


class InfeasibleError(SdnPlannerError):
    def __init__(self, layer: str, diagnostics: Iterable[str] = ()):
        self.layer = layer
        self.diagnostics = list(diagnostics)
        super().__init__(f'The {layer} model is infeasible')

    def __str__(self) -> str:
        if not self.diagnostics:
            return self.args[0]
        details = '\n'.join(f'  - {d}' for d in self.diagnostics)
        return f'{self.args[0]}; binding constraints:\n{details}'


class RiskError(SdnPlannerError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


class FrameworkAborted(InfeasibleError):
    def __init__(self, iteration: int, cause: InfeasibleError):
        super().__init__(cause.layer, cause.diagnostics)
        self.iteration = iteration
        self.cause = cause

    def __str__(self) -> str:
        return f'Iteration {self.iteration} aborted: {super().__str__()}'
