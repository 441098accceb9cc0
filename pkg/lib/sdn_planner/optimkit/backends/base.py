"""
Solver backend base class and registry.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from typing import Type

from ...exceptions import SolverError, SolutionVerificationError
from ..model import ModelIR, Solution, SolveStatus, SolverLimits

__all__ = ['SolverBackend', 'get_backend']
log = logging.getLogger(__name__)


class SolverBackend(ABC):
    name: str = None
    _backend_class_map: dict[str, Type[SolverBackend]] = {}

    def __init_subclass__(cls, name: str = None, **kwargs):
        super().__init_subclass__(**kwargs)
        if name:
            cls._backend_class_map[name] = cls
            cls.name = name

    def __init__(self, limits: SolverLimits | None = None):
        self.limits = limits or SolverLimits()

    def __repr__(self) -> str:
        return f'<{self.__class__.__name__}[{self.limits}]>'

    @classmethod
    def backend_names(cls) -> list[str]:
        return sorted(cls._backend_class_map)

    def solve(self, model: ModelIR) -> Solution:
        """
        Solve the given model.  Any solution that carries values is re-verified against every bound, integrality
        requirement, and constraint of the model before it is returned, regardless of the backend that produced it.

        :param model: The model to minimize
        :return: The solution, with status ``infeasible`` if no feasible assignment exists
        :raises SolutionVerificationError: If the backend returned values that violate the model
        """
        log.debug(f'Solving {model} with {self.name}')
        if not model.variables:
            return Solution(SolveStatus.OPTIMAL, {}, model.objective.constant, backend=self.name)

        start = time.monotonic()
        solution = self._solve(model)
        solution.backend = self.name
        elapsed = time.monotonic() - start
        if solution.has_values:
            if violations := model.check(solution.values, self.limits.eps_feas, self.limits.eps_int):
                raise SolutionVerificationError(f'The {self.name} solution for {model.name} is invalid', violations)
            solution.objective = model.evaluate(solution.values)
        elif solution.status == SolveStatus.LIMIT:
            raise SolverError(f'The {self.name} backend reached its limits before finding a solution for {model.name}')

        log.debug(
            f'Solved {model.name} in {elapsed:.3f}s: status={solution.status.value} objective={solution.objective}'
            f' nodes={solution.nodes_explored}'
        )
        return solution

    @abstractmethod
    def _solve(self, model: ModelIR) -> Solution:
        raise NotImplementedError


def get_backend(spec: str, limits: SolverLimits | None = None, **kwargs) -> SolverBackend:
    """
    :param spec: A backend name, optionally followed by ``:<option>`` (e.g., ``external:cbc`` selects the solver used
      by the external backend)
    :param limits: Solver limits to apply
    :param kwargs: Additional keyword arguments for the backend's constructor
    :return: The configured backend
    """
    name, _, option = spec.partition(':')
    try:
        backend_cls = SolverBackend._backend_class_map[name]
    except KeyError as e:
        names = ', '.join(SolverBackend.backend_names())
        raise SolverError(f'Unknown solver backend={name!r} - expected one of: {names}') from e
    if option:
        kwargs['option'] = option
    return backend_cls(limits=limits, **kwargs)
