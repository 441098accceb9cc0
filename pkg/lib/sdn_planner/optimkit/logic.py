"""
Exact linearizations of boolean logic over binary variables, plus a builder that folds constant or trivial gadget
outputs instead of creating variables for them.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import math
from typing import Iterable, Sequence, Union

from ..exceptions import ModelError
from .model import ModelIR, VarRef, LinExpr, Relation, ExprLike

__all__ = ['add_or', 'add_and', 'add_min_select', 'add_indicator_lb', 'LogicBuilder', 'BoolTerm']
log = logging.getLogger(__name__)

#: A binary variable, or the constant it was folded into
BoolTerm = Union[VarRef, bool]


def _require_binary(*variables: VarRef):
    for var in variables:
        if not isinstance(var, VarRef) or not var.is_binary:
            raise ModelError(f'Expected a binary variable, found {var!r}')


def add_or(model: ModelIR, y: VarRef, xs: Sequence[VarRef], name: str | None = None):
    """Constrain ``y = x_1 OR ... OR x_n`` via ``y >= x_i`` and ``y <= sum(x)``"""
    _require_binary(y, *xs)
    name = name or y.name
    for i, x in enumerate(xs):
        model.add_constraint(y - x, Relation.GE, 0, f'{name}:or_lb{i}')
    model.add_constraint(y - LinExpr.sum(xs), Relation.LE, 0, f'{name}:or_ub')


def add_and(model: ModelIR, y: VarRef, xs: Sequence[VarRef], name: str | None = None):
    """Constrain ``y = x_1 AND ... AND x_n`` via ``y <= x_i`` and ``y >= sum(x) - (n - 1)``"""
    _require_binary(y, *xs)
    name = name or y.name
    for i, x in enumerate(xs):
        model.add_constraint(y - x, Relation.LE, 0, f'{name}:and_ub{i}')
    model.add_constraint(y - LinExpr.sum(xs), Relation.GE, 1 - len(xs), f'{name}:and_lb')


def add_min_select(model: ModelIR, r: VarRef, terms: Sequence[ExprLike], name: str | None = None) -> list[VarRef]:
    """
    Constrain ``r >= min(terms)`` through one selection binary per term: exactly one term is selected, and ``r`` is
    bounded below by the selected term.  The ``- (1 - z_i)`` relaxation of the other rows is exact only because every
    term lies in ``[0, 1]``.  Since ``r`` is only bounded from below, it equals the minimum only when the objective
    pushes it down (i.e., ``r`` has a strictly positive objective coefficient).

    :return: The selection binaries (auxiliary; empty when a single term made them unnecessary)
    """
    if not terms:
        raise ModelError(f'Unable to select the minimum of an empty list of terms for {r.name}')
    name = name or r.name
    if len(terms) == 1:
        model.add_constraint(r - terms[0], Relation.EQ, 0, f'{name}:min_eq')
        return []

    selectors = [model.add_binary(f'{name}:z{i}', aux=True) for i in range(len(terms))]
    model.add_constraint(LinExpr.sum(selectors), Relation.EQ, 1, f'{name}:select')
    for i, (term, z) in enumerate(zip(terms, selectors)):
        # r >= term - (1 - z)
        model.add_constraint(r - term - z, Relation.GE, -1, f'{name}:min{i}')
    return selectors


def add_indicator_lb(model: ModelIR, x: VarRef, f: VarRef, lb: float, ub: float, name: str | None = None):
    """Constrain ``f >= lb * x`` and ``f <= ub * x`` so an inactive ``x`` forces ``f = 0``"""
    _require_binary(x)
    if not math.isfinite(ub):
        raise ModelError(f'The upper bound for indicator {x.name} -> {f.name} must be finite')
    if not 0 <= lb <= ub:
        raise ModelError(f'Invalid indicator bounds: expected 0 <= lb={lb} <= ub={ub}')
    name = name or f.name
    model.add_constraint(f - lb * x, Relation.GE, 0, f'{name}:ind_lb')
    model.add_constraint(f - ub * x, Relation.LE, 0, f'{name}:ind_ub')


class LogicBuilder:
    """
    Wraps the OR / AND gadgets with constant folding:

    - constants are absorbed (``x OR True = True``, ``x AND False = False``, etc.)
    - a gadget over a single remaining input returns that input instead of a new variable
    - an OR that covers an entire registered exactly-one group is True
    - identical gadgets are created once
    """

    __slots__ = ('model', '_groups', '_cache')

    def __init__(self, model: ModelIR):
        self.model = model
        self._groups: list[frozenset[VarRef]] = []
        self._cache: dict[tuple[str, frozenset[VarRef]], VarRef] = {}

    def register_exactly_one(self, group: Iterable[VarRef]):
        """Record that exactly one of the given binaries is 1 in every feasible assignment"""
        if group := frozenset(group):
            self._groups.append(group)

    def any_of(self, inputs: Iterable[BoolTerm], name: str) -> BoolTerm:
        variables = set()
        for term in inputs:
            if term is True:
                return True
            elif term is not False:
                variables.add(term)

        if not variables:
            return False
        elif len(variables) == 1:
            return next(iter(variables))

        key = frozenset(variables)
        if any(group <= key for group in self._groups):
            return True
        try:
            return self._cache['or', key]
        except KeyError:
            pass
        y = self._cache['or', key] = self.model.add_binary(name, aux=True)
        add_or(self.model, y, sorted(variables, key=_var_index), name)
        return y

    def all_of(self, inputs: Iterable[BoolTerm], name: str) -> BoolTerm:
        variables = set()
        for term in inputs:
            if term is False:
                return False
            elif term is not True:
                variables.add(term)

        if not variables:
            return True
        elif len(variables) == 1:
            return next(iter(variables))

        key = frozenset(variables)
        try:
            return self._cache['and', key]
        except KeyError:
            pass
        y = self._cache['and', key] = self.model.add_binary(name, aux=True)
        add_and(self.model, y, sorted(variables, key=_var_index), name)
        return y


def _var_index(var: VarRef) -> int:
    return var.index
