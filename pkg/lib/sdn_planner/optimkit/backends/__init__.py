from .base import SolverBackend, get_backend
from .exact import ExactBackend
from .external import ExternalBackend, SOLVER_CMD_ENV_VAR

__all__ = ['SolverBackend', 'get_backend', 'ExactBackend', 'ExternalBackend', 'SOLVER_CMD_ENV_VAR']
