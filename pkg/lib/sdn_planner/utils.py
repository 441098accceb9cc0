"""
Shared helpers: template rendering and small formatting utilities.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
import re
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable

from jinja2 import Environment as JinjaEnv, FileSystemLoader as JinjaFSLoader, StrictUndefined

__all__ = ['TMPL_DIR', 'render_template', 'fmt_num', 'dot_id', 'join_members', 'WILDCARD']
log = logging.getLogger(__name__)

TMPL_DIR = Path(__file__).resolve().parent.joinpath('templates').as_posix()

#: Traffic type used only for block-everything firewalls
WILDCARD = '*'

_DOT_ID_MATCH = re.compile(r'^[A-Za-z_][A-Za-z0-9_]*$').match


@lru_cache(1)
def _jinja_env() -> JinjaEnv:
    env = JinjaEnv(
        loader=JinjaFSLoader(TMPL_DIR),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters['num'] = fmt_num
    env.filters['dot_id'] = dot_id
    return env


def render_template(name: str, **render_vars: Any) -> str:
    return _jinja_env().get_template(name).render(**render_vars)


def fmt_num(value: float | int | None, places: int = 4) -> str:
    if value is None:
        return '-'
    if isinstance(value, int) or float(value).is_integer():
        return str(int(value))
    return f'{value:.{places}f}'.rstrip('0').rstrip('.')


def dot_id(value: str) -> str:
    """Quote a DOT identifier only when it is not a plain alphanumeric id"""
    if _DOT_ID_MATCH(value):
        return value
    escaped = value.replace('\\', '\\\\').replace('"', '\\"')
    return f'"{escaped}"'


def join_members(members: Iterable[str]) -> str:
    return ','.join(sorted(members))
