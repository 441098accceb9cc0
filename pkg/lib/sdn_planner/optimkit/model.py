"""
Solver-neutral optimization model: variables, linear expressions and constraints, and a linear objective with convex
separable quadratic terms (always minimized).

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Union

from ..exceptions import ModelError

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
]
log = logging.getLogger(__name__)

Number = Union[int, float]
ExprLike = Union['LinExpr', 'VarRef', Number]


class VarKind(str, Enum):
    BINARY = 'binary'
    CONTINUOUS = 'continuous'


class Relation(str, Enum):
    LE = '<='
    EQ = '='
    GE = '>='


@dataclass(frozen=True, eq=False)
class VarRef:
    """
    Handle for a model variable.  Variables compare by identity, so they can be used as dict keys, and support
    ``+``, ``-``, and scalar ``*`` to build :class:`LinExpr` objects.  Auxiliary binaries are outputs of logic gadgets
    whose values are implied by the decision binaries.
    """

    index: int
    kind: VarKind
    lo: float
    hi: float
    name: str
    aux: bool = False

    @property
    def is_binary(self) -> bool:
        return self.kind == VarKind.BINARY

    def __add__(self, other: ExprLike) -> LinExpr:
        return LinExpr.of(self) + other

    __radd__ = __add__

    def __sub__(self, other: ExprLike) -> LinExpr:
        return LinExpr.of(self) - other

    def __rsub__(self, other: ExprLike) -> LinExpr:
        return LinExpr.of(other) - self

    def __mul__(self, other: Number) -> LinExpr:
        return LinExpr.of(self) * other

    __rmul__ = __mul__

    def __neg__(self) -> LinExpr:
        return LinExpr.of(self) * -1

    def __repr__(self) -> str:
        return f'<{self.__class__.__name__}#{self.index}[{self.kind.value}]:{self.name}>'


class LinExpr:
    __slots__ = ('terms', 'constant')

    def __init__(self, terms: Mapping[VarRef, float] | None = None, constant: float = 0.0):
        self.terms: dict[VarRef, float] = dict(terms) if terms else {}
        self.constant = float(constant)

    @classmethod
    def of(cls, value: ExprLike) -> LinExpr:
        if isinstance(value, LinExpr):
            return value
        elif isinstance(value, VarRef):
            return cls({value: 1.0})
        elif isinstance(value, (int, float)):
            return cls(constant=value)
        raise TypeError(f'Unable to build a linear expression from {value!r}')

    @classmethod
    def sum(cls, values: Iterable[ExprLike]) -> LinExpr:
        expr = cls()
        for value in values:
            expr._iadd(value, 1.0)
        return expr

    def copy(self) -> LinExpr:
        return LinExpr(self.terms, self.constant)

    def _iadd(self, other: ExprLike, sign: float) -> LinExpr:
        other = LinExpr.of(other)
        terms = self.terms
        for var, coef in other.terms.items():
            terms[var] = terms.get(var, 0.0) + sign * coef
        self.constant += sign * other.constant
        return self

    def __add__(self, other: ExprLike) -> LinExpr:
        return self.copy()._iadd(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other: ExprLike) -> LinExpr:
        return self.copy()._iadd(other, -1.0)

    def __rsub__(self, other: ExprLike) -> LinExpr:
        return LinExpr.of(other).copy()._iadd(self, -1.0)

    def __mul__(self, other: Number) -> LinExpr:
        if not isinstance(other, (int, float)):
            raise TypeError('Linear expressions may only be multiplied by scalars')
        return LinExpr({var: coef * other for var, coef in self.terms.items()}, self.constant * other)

    __rmul__ = __mul__

    def __neg__(self) -> LinExpr:
        return self * -1

    def value(self, values: Mapping[VarRef, float]) -> float:
        return self.constant + sum(coef * values.get(var, 0.0) for var, coef in self.terms.items())

    def __repr__(self) -> str:
        terms = ' + '.join(f'{coef:g}*{var.name}' for var, coef in self.terms.items())
        return f'<LinExpr[{terms or "0"} + {self.constant:g}]>'


@dataclass
class Constraint:
    """A linear row in the normalized form ``expr <relation> rhs`` (the expression carries no constant)"""

    expr: LinExpr
    relation: Relation
    rhs: float
    name: str

    def violation(self, values: Mapping[VarRef, float]) -> float:
        lhs = self.expr.value(values)
        if self.relation == Relation.LE:
            return max(0.0, lhs - self.rhs)
        elif self.relation == Relation.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


class ModelIR:
    def __init__(self, name: str = 'model'):
        self.name = name
        self.variables: list[VarRef] = []
        self.constraints: list[Constraint] = []
        self.objective = LinExpr()
        self.quadratic: dict[VarRef, float] = {}

    def __repr__(self) -> str:
        return (
            f'<{self.__class__.__name__}[{self.name}, vars={len(self.variables)}, binaries={len(self.binaries)},'
            f' constraints={len(self.constraints)}, quadratic={len(self.quadratic)}]>'
        )

    # region Variables

    def _add_var(self, name: str, kind: VarKind, lo: float, hi: float, aux: bool = False) -> VarRef:
        if lo > hi or math.isnan(lo) or math.isnan(hi):
            raise ModelError(f'Invalid bounds [{lo}, {hi}] for variable {name!r}')
        var = VarRef(len(self.variables), kind, float(lo), float(hi), name, aux)
        self.variables.append(var)
        return var

    def add_binary(self, name: str, aux: bool = False) -> VarRef:
        return self._add_var(name, VarKind.BINARY, 0, 1, aux)

    def add_continuous(self, name: str, lo: float = 0.0, hi: float = math.inf) -> VarRef:
        return self._add_var(name, VarKind.CONTINUOUS, lo, hi)

    @property
    def binaries(self) -> list[VarRef]:
        return [var for var in self.variables if var.is_binary]

    @property
    def decision_binaries(self) -> list[VarRef]:
        return [var for var in self.variables if var.is_binary and not var.aux]

    def _check_var(self, var: VarRef):
        if var.index >= len(self.variables) or self.variables[var.index] is not var:
            raise ModelError(f'Variable {var!r} does not belong to model={self.name!r}')

    # endregion

    # region Constraints & Objective

    def add_constraint(
        self, lhs: ExprLike, relation: Relation, rhs: ExprLike = 0, name: str | None = None
    ) -> Constraint:
        expr = LinExpr.of(lhs) - rhs
        expr.terms = {var: coef for var, coef in expr.terms.items() if coef != 0}
        for var, coef in expr.terms.items():
            self._check_var(var)
            if not math.isfinite(coef):
                raise ModelError(f'Non-finite coefficient={coef} for {var.name} in constraint {name!r}')
        if not math.isfinite(expr.constant):
            raise ModelError(f'Non-finite constant in constraint {name!r}')
        rhs_value = -expr.constant
        expr.constant = 0.0
        constraint = Constraint(expr, Relation(relation), rhs_value, name or f'c{len(self.constraints)}')
        self.constraints.append(constraint)
        return constraint

    def minimize(self, expr: ExprLike):
        """Replace the linear part of the objective"""
        self.objective = LinExpr.of(expr).copy()
        for var in self.objective.terms:
            self._check_var(var)

    def add_objective(self, expr: ExprLike):
        self.objective = self.objective + expr
        for var in LinExpr.of(expr).terms:
            self._check_var(var)

    def add_quadratic(self, coef: float, var: VarRef):
        """Add ``coef * var**2`` to the objective; coefficients must be non-negative to keep the objective convex"""
        self._check_var(var)
        if not (math.isfinite(coef) and coef >= 0):
            raise ModelError(f'Quadratic coefficient={coef} for {var.name} must be finite and non-negative')
        if coef:
            self.quadratic[var] = self.quadratic.get(var, 0.0) + coef

    # endregion

    def evaluate(self, values: Mapping[VarRef, float]) -> float:
        quad = sum(coef * values.get(var, 0.0) ** 2 for var, coef in self.quadratic.items())
        return self.objective.value(values) + quad

    def check(self, values: Mapping[VarRef, float], eps_feas: float = 1e-6, eps_int: float = 1e-6) -> list[str]:
        """
        :param values: Candidate variable assignment (missing variables are treated as 0)
        :param eps_feas: Tolerance for bounds and constraint rows
        :param eps_int: Integrality tolerance for binaries
        :return: Human-readable descriptions of every violated bound, integrality requirement, or row
        """
        violations = []
        for var in self.variables:
            value = values.get(var, 0.0)
            if value < var.lo - eps_feas or value > var.hi + eps_feas:
                violations.append(f'{var.name}={value:g} is outside [{var.lo:g}, {var.hi:g}]')
            if var.is_binary and min(abs(value), abs(value - 1)) > eps_int:
                violations.append(f'{var.name}={value:g} is not binary')
        for constraint in self.constraints:
            if (amount := constraint.violation(values)) > eps_feas:
                violations.append(f'{constraint.name} is violated by {amount:g}')
        return violations


class SolveStatus(str, Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    LIMIT = 'limit'


@dataclass
class Solution:
    status: SolveStatus
    values: dict[VarRef, float] = field(default_factory=dict)
    objective: float | None = None
    nodes_explored: int = 0
    approximation_bound: float = 0.0
    backend: str = ''
    log: str = ''

    @property
    def has_values(self) -> bool:
        return self.status != SolveStatus.INFEASIBLE and bool(self.values)

    def __getitem__(self, var: VarRef) -> float:
        return self.values.get(var, 0.0)

    def value(self, expr: ExprLike) -> float:
        return LinExpr.of(expr).value(self.values)

    def is_set(self, var: VarRef | bool) -> bool:
        """Truth value of a binary variable, or of a constant that replaced one"""
        if isinstance(var, bool):
            return var
        return self.values.get(var, 0.0) > 0.5


@dataclass(frozen=True)
class SolverLimits:
    time_limit: float = 300.0
    max_binaries: int = 25
    max_nodes: int | None = None
    eps_feas: float = 1e-6
    eps_int: float = 1e-6
