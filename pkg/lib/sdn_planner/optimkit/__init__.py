"""
Solver-neutral optimization toolkit: model IR, boolean-logic linearizations, and solver backends.

:author: Doug Skrypa
"""

from __future__ import annotations

from .model import VarKind, VarRef, LinExpr, Relation, Constraint, ModelIR, SolveStatus, Solution, SolverLimits
from .logic import add_or, add_and, add_min_select, add_indicator_lb, LogicBuilder, BoolTerm
from .lp_format import QuadMode, write_lp
from .backends import SolverBackend, ExactBackend, ExternalBackend, get_backend, SOLVER_CMD_ENV_VAR

__all__ = [
    'VarKind',
    'VarRef',
    'LinExpr',
    'Relation',
    'Constraint',
    'ModelIR',
    'SolveStatus',
    'Solution',
    'SolverLimits',
    'add_or',
    'add_and',
    'add_min_select',
    'add_indicator_lb',
    'LogicBuilder',
    'BoolTerm',
    'QuadMode',
    'write_lp',
    'SolverBackend',
    'ExactBackend',
    'ExternalBackend',
    'get_backend',
    'SOLVER_CMD_ENV_VAR',
    'solve_exact',
    'solve_external',
]


def solve_exact(model: ModelIR, limits: SolverLimits | None = None) -> Solution:
    return ExactBackend(limits).solve(model)


def solve_external(model: ModelIR, solver_command: str, limits: SolverLimits | None = None, **kwargs) -> Solution:
    """
    :param model: The model to solve
    :param solver_command: Command template with ``{model}``, ``{solution}``, and optionally ``{time_limit}``
      placeholders
    :param limits: Solver limits
    :param kwargs: Additional keyword arguments for :class:`ExternalBackend` (e.g., ``quad='native'``)
    """
    return ExternalBackend(limits, command=solver_command, **kwargs).solve(model)
