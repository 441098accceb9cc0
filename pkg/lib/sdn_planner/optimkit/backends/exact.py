"""
Embedded exact backend: depth-first branch and bound over the binary variables.

Each node's continuous relaxation is solved with the HiGHS LP solver via :func:`scipy.optimize.linprog`; when the
model has quadratic objective terms, the LP optimum seeds an SLSQP solve of the (convex) relaxed QP.  SLSQP only
provides the relaxed point; the node's bound comes from minimizing the objective's linearization at that point over
the same polytope, which never exceeds the relaxation's optimum.  This backend is an oracle for small models, not a
production solver: it is guarded by a limit on the number of decision binaries.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import math
import time

import numpy as np
from scipy.optimize import linprog, minimize

from ...exceptions import SolverError, SolverGuardError
from ..model import ModelIR, Relation, Solution, SolveStatus, SolverLimits
from .base import SolverBackend

__all__ = ['ExactBackend']
log = logging.getLogger(__name__)

_QP_FEAS_TOL = 1e-7


class ExactBackend(SolverBackend, name='exact'):
    def __init__(self, limits: SolverLimits | None = None, option: str | None = None):
        if option:
            raise SolverError(f'The exact backend does not accept options (found {option!r})')
        super().__init__(limits)

    def _solve(self, model: ModelIR) -> Solution:
        if (count := len(model.decision_binaries)) > self.limits.max_binaries:
            raise SolverGuardError(count, self.limits.max_binaries)
        return BranchAndBound(model, self.limits).run()


class BranchAndBound:
    """
    Depth-first search that always explores the 0-branch first and branches on the first fractional binary in
    variable creation order, so results are deterministic.  A node is pruned when its relaxation bound cannot
    strictly improve on the incumbent.
    """

    def __init__(self, model: ModelIR, limits: SolverLimits):
        self.model = model
        self.limits = limits
        n = len(model.variables)
        self.constant = model.objective.constant
        self.c = np.zeros(n)
        for var, coef in model.objective.terms.items():
            self.c[var.index] += coef
        self.q = np.zeros(n)
        for var, coef in model.quadratic.items():
            self.q[var.index] = coef
        self.has_quad = bool(self.q.any())

        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for constraint in model.constraints:
            row = np.zeros(n)
            for var, coef in constraint.expr.terms.items():
                row[var.index] += coef
            if constraint.relation == Relation.LE:
                ub_rows.append(row)
                ub_rhs.append(constraint.rhs)
            elif constraint.relation == Relation.GE:
                ub_rows.append(-row)
                ub_rhs.append(-constraint.rhs)
            else:
                eq_rows.append(row)
                eq_rhs.append(constraint.rhs)

        self.a_ub = np.array(ub_rows) if ub_rows else None
        self.b_ub = np.array(ub_rhs) if ub_rows else None
        self.a_eq = np.array(eq_rows) if eq_rows else None
        self.b_eq = np.array(eq_rhs) if eq_rows else None
        self.lo = np.array([var.lo for var in model.variables], dtype=float)
        self.hi = np.array([var.hi for var in model.variables], dtype=float)
        self.binaries = np.array([var.index for var in model.variables if var.is_binary], dtype=int)

    def run(self) -> Solution:
        limits = self.limits
        deadline = time.monotonic() + limits.time_limit
        incumbent, incumbent_obj = None, math.inf
        stack = [(self.lo, self.hi)]
        nodes = 0
        status = SolveStatus.OPTIMAL
        while stack:
            if (limits.max_nodes is not None and nodes >= limits.max_nodes) or time.monotonic() > deadline:
                log.warning(f'Branch and bound for {self.model.name} stopped early after {nodes} nodes')
                status = SolveStatus.LIMIT
                break

            lo, hi = stack.pop()
            nodes += 1
            if (relaxed := self._relax(lo, hi)) is None:
                continue
            x, bound = relaxed
            if bound >= incumbent_obj - _tolerance(incumbent_obj):
                continue

            if (branch_on := self._first_fractional(x)) is None:
                if (candidate := self._complete(x, lo, hi)) is not None:
                    x, obj = candidate
                    if obj < incumbent_obj - _tolerance(incumbent_obj):
                        incumbent, incumbent_obj = x, obj
                        log.debug(f'New incumbent for {self.model.name} at node {nodes}: objective={obj:.6f}')
                continue

            lo_one = lo.copy()
            lo_one[branch_on] = 1
            hi_zero = hi.copy()
            hi_zero[branch_on] = 0
            stack.append((lo_one, hi))
            stack.append((lo, hi_zero))

        log.debug(f'Branch and bound for {self.model.name} explored {nodes} nodes')
        if incumbent is None:
            status = SolveStatus.LIMIT if status == SolveStatus.LIMIT else SolveStatus.INFEASIBLE
            return Solution(status, nodes_explored=nodes)
        values = {var: float(incumbent[var.index]) for var in self.model.variables}
        return Solution(status, values, incumbent_obj, nodes_explored=nodes)

    def _first_fractional(self, x: np.ndarray) -> int | None:
        eps = self.limits.eps_int
        for index in self.binaries:
            if abs(x[index] - round(x[index])) > eps:
                return int(index)
        return None

    def _complete(self, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, float] | None:
        """Fix the (integral) binaries and re-solve the continuous remainder to obtain a consistent assignment"""
        if not len(self.binaries):
            return x, self._objective(x)
        fixed = np.round(x[self.binaries])
        lo, hi = lo.copy(), hi.copy()
        lo[self.binaries] = fixed
        hi[self.binaries] = fixed
        if (relaxed := self._relax(lo, hi)) is None:
            return None
        x = relaxed[0]
        x[self.binaries] = fixed
        return x, self._objective(x)

    def _objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.q @ (x * x) + self.constant)

    def _relax(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, float] | None:
        """
        :return: A relaxed solution and a valid lower bound on the relaxation's optimum, or None if it is infeasible
        """
        if np.any(lo > hi):
            return None
        bounds = [(l, None if math.isinf(h) else h) for l, h in zip(lo, hi)]
        res = self._linprog(self.c, bounds)
        if res.status == 2:
            return None
        elif res.status != 0:
            raise SolverError(f'Relaxation of {self.model.name} failed: {res.message}')

        x_lp = res.x
        # The quadratic terms are non-negative, so the LP optimum is always a valid lower bound
        linear_bound = float(res.fun) + self.constant
        if not self.has_quad:
            return x_lp, linear_bound

        qp = minimize(
            self._objective,
            x_lp,
            jac=self._gradient,
            bounds=bounds,
            constraints=self._qp_constraints,
            method='SLSQP',
            options={'ftol': 1e-12, 'maxiter': 1000},
        )
        if qp.success and self._is_feasible(qp.x, lo, hi):
            x_qp = np.clip(qp.x, lo, hi)
            return x_qp, max(self._linearized_bound(x_qp, bounds), linear_bound)
        log.debug(f'QP relaxation of {self.model.name} did not converge ({qp.message}); using the LP bound')
        return x_lp, linear_bound

    def _linprog(self, c: np.ndarray, bounds: list[tuple[float, float | None]]):
        return linprog(c, self.a_ub, self.b_ub, self.a_eq, self.b_eq, bounds=bounds, method='highs')

    def _linearized_bound(self, x: np.ndarray, bounds: list[tuple[float, float | None]]) -> float:
        """
        Lower bound on the relaxed QP from the convexity inequality ``f(y) >= f(x) + grad(x) . (y - x)``, minimized
        over the relaxation's feasible region.
        """
        grad = self._gradient(x)
        res = self._linprog(grad, bounds)
        if res.status != 0:
            return -math.inf
        return self._objective(x) - float(grad @ x) + float(res.fun)

    def _gradient(self, x: np.ndarray) -> np.ndarray:
        return self.c + 2 * self.q * x

    @property
    def _qp_constraints(self) -> list[dict]:
        constraints = []
        if self.a_ub is not None:
            a_ub, b_ub = self.a_ub, self.b_ub
            constraints.append({'type': 'ineq', 'fun': lambda x: b_ub - a_ub @ x, 'jac': lambda x: -a_ub})
        if self.a_eq is not None:
            a_eq, b_eq = self.a_eq, self.b_eq
            constraints.append({'type': 'eq', 'fun': lambda x: a_eq @ x - b_eq, 'jac': lambda x: a_eq})
        return constraints

    def _is_feasible(self, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> bool:
        if np.any(x < lo - _QP_FEAS_TOL) or np.any(x > hi + _QP_FEAS_TOL):
            return False
        if self.a_ub is not None and np.any(self.a_ub @ x - self.b_ub > _QP_FEAS_TOL):
            return False
        if self.a_eq is not None and np.any(np.abs(self.a_eq @ x - self.b_eq) > _QP_FEAS_TOL):
            return False
        return True


def _tolerance(incumbent: float) -> float:
    if math.isinf(incumbent):
        return 0.0
    return 1e-9 * max(1.0, abs(incumbent))
