"""
CPLEX LP format writer.

Variables are written as ``x<index>`` and rows as ``c<index>`` so that solution files can be mapped back to the
:class:`ModelIR` without relying on user-facing names (which may contain characters the format does not allow).

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from ..exceptions import ModelError
from .model import ModelIR, VarRef, Relation

__all__ = ['QuadMode', 'LpText', 'write_lp', 'var_name', 'piecewise_breakpoints']
log = logging.getLogger(__name__)

DEFAULT_BREAKPOINTS = 8
_TERMS_PER_LINE = 8
_RELATIONS = {Relation.LE: '<=', Relation.EQ: '=', Relation.GE: '>='}


class QuadMode(str, Enum):
    NATIVE = 'native'
    PIECEWISE = 'piecewise'


@dataclass
class LpText:
    text: str
    names: dict[str, VarRef]
    #: Upper bound on how far the piecewise objective may understate the true quadratic objective
    approximation_bound: float = 0.0


def var_name(var: VarRef) -> str:
    return f'x{var.index}'


def _num(value: float) -> str:
    return f'{value:.12g}'


def _terms(pairs: Iterable[tuple[float, str]], first: bool = True) -> Iterator[str]:
    for coef, name in pairs:
        if coef == 0:
            continue
        sign = '-' if coef < 0 else ('' if first else '+')
        first = False
        yield f'{sign} {_num(abs(coef))} {name}'.lstrip()


def _wrap(label: str, tokens: list[str]) -> list[str]:
    lines = []
    for i in range(0, len(tokens), _TERMS_PER_LINE):
        chunk = ' '.join(tokens[i : i + _TERMS_PER_LINE])
        lines.append(f' {label}: {chunk}' if i == 0 else f'   {chunk}')
    return lines or [f' {label}:']


def piecewise_breakpoints(upper: float, count: int = DEFAULT_BREAKPOINTS) -> list[float]:
    return [i * upper / count for i in range(count + 1)]


def write_lp(
    model: ModelIR, quad: QuadMode | str = QuadMode.PIECEWISE, breakpoints: int = DEFAULT_BREAKPOINTS
) -> LpText:
    """
    Serialize the given model in CPLEX LP format.

    The objective's constant term is omitted (not every reader accepts one); callers re-evaluate the objective in
    process.  In piecewise mode, each ``q * v**2`` term is replaced by ``q * t`` with tangent cuts
    ``t >= 2 b v - b**2`` at ``breakpoints + 1`` evenly spaced points ``b`` in ``[0, hi(v)]``, which under-approximates
    the square by at most ``(hi(v) / breakpoints)**2 / 4``.

    :param model: The model to serialize
    :param quad: Whether quadratic terms should be written natively or approximated
    :param breakpoints: The number of piecewise segments per quadratic term
    :return: The LP text, the name to variable mapping, and the approximation error bound
    """
    quad = QuadMode(quad)
    names = {var_name(var): var for var in model.variables}
    obj_pairs = [(coef, var_name(var)) for var, coef in model.objective.terms.items()]
    quad_tokens = []
    extra_rows = []
    extra_vars = []
    bound = 0.0

    if quad == QuadMode.NATIVE:
        quad_tokens = [f'+ {_num(2 * coef)} {var_name(var)} ^2' for var, coef in model.quadratic.items()]
    else:
        for var, coef in model.quadratic.items():
            if not math.isfinite(var.hi):
                raise ModelError(f'Piecewise approximation requires a finite upper bound for {var.name}')
            aux = f't{var.index}'
            extra_vars.append(aux)
            obj_pairs.append((coef, aux))
            for i, b in enumerate(piecewise_breakpoints(var.hi, breakpoints)):
                row = _terms([(1, aux), (-2 * b, var_name(var))])
                extra_rows.append(f' q{var.index}_{i}: {" ".join(row)} >= {_num(-b * b + 0.0)}')
            bound += coef * (var.hi / breakpoints) ** 2 / 4

    lines = [f'\\ model: {model.name}', 'Minimize']
    obj_tokens = list(_terms(obj_pairs))
    if quad_tokens:
        quad_tokens[0] = quad_tokens[0][2:]
        obj_tokens.extend(('+ [' if obj_tokens else '[', *quad_tokens, '] / 2'))
    elif not obj_tokens and model.variables:
        obj_tokens = [f'0 {var_name(model.variables[0])}']
    lines.extend(_wrap('obj', obj_tokens))

    lines.append('Subject To')
    for i, constraint in enumerate(model.constraints):
        tokens = list(_terms((coef, var_name(var)) for var, coef in constraint.expr.terms.items()))
        if not tokens:
            if constraint.violation({}) > 0:
                raise ModelError(f'Constraint {constraint.name} has no terms and can never be satisfied')
            log.debug(f'Skipping constraint {constraint.name} with no terms')
            continue
        row = _wrap(f'c{i}', tokens)
        row[-1] += f' {_RELATIONS[constraint.relation]} {_num(constraint.rhs)}'
        lines.extend(row)
    lines.extend(extra_rows)

    lines.append('Bounds')
    for var in model.variables:
        name = var_name(var)
        if var.is_binary:
            if var.lo != 0 or var.hi != 1:
                lines.append(f' {_num(var.lo)} <= {name} <= {_num(var.hi)}')
        elif math.isinf(var.hi):
            lines.append(f' {name} >= {_num(var.lo)}' if math.isfinite(var.lo) else f' {name} free')
        elif math.isinf(var.lo):
            lines.append(f' -inf <= {name} <= {_num(var.hi)}')
        else:
            lines.append(f' {_num(var.lo)} <= {name} <= {_num(var.hi)}')
    lines.extend(f' {aux} >= 0' for aux in extra_vars)

    if binaries := [var_name(var) for var in model.binaries]:
        lines.append('Binary')
        lines.extend(f' {name}' for name in binaries)
    lines.append('End')
    return LpText('\n'.join(lines) + '\n', names, bound)
