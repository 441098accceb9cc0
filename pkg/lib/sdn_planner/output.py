"""
Renderers for run results: SDN rule fragments, the text / CSV run report, and per-iteration DOT snapshots.

:author: Doug Skrypa
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from io import StringIO
from pathlib import Path
from typing import Iterable

from .coordinator import RunResult, Configuration, IterationRecord
from .scenario import Scenario, NodeKind
from .topology import export_dot, build_annotations
from .utils import render_template, fmt_num

__all__ = [
    'emit_sdn_fragments',
    'render_report',
    'render_csv',
    'render_iteration_dot',
    'write_outputs',
    'history_rows',
    'COLUMNS',
]
log = logging.getLogger(__name__)

COLUMNS = (
    'iteration',
    'func_obj',
    'func_obj_no_reward',
    'sec_obj',
    'overall_obj',
    'network_risk',
    'served_flows',
    'blocked_flows',
    'firewalls',
    'inspection_posts',
    'nodes_explored',
    'cut',
    'judgement',
)
SERVED_EDGE = {'style': 'bold'}
BLOCKED_EDGE = {'style': 'dashed', 'color': 'red'}


def emit_sdn_fragments(result: RunResult | Configuration, scenario: Scenario | None = None) -> str:
    """
    Translate a configuration into per-node rule fragments.  Each node's drop rules come first, then inspection, then
    one forwarding rule per served flow that crosses it.  When several flows to the same destination and type cross a
    node, their forwarding rules also match on the source, so every rule traces back to exactly one active path.
    """
    if isinstance(result, RunResult):
        scenario, config = result.scenario, result.best
    elif scenario is None:
        raise TypeError('A scenario is required to emit rules for a bare configuration')
    else:
        config = result

    rules: dict[str, list[str]] = defaultdict(list)
    for node, ttype in sorted(config.security.fw):
        rules[node].append(f'at {node}: match(type={ttype}) -> drop')
    for node in sorted(config.security.pi):
        rules[node].append(f'at {node}: inspect')

    hops: dict[tuple[str, str, str], dict[str, str]] = defaultdict(dict)
    node_map = scenario.node_map
    for flow in config.served_flows:
        path = config.functional.active_paths[flow]
        for node in path.nodes[:-1]:
            if node_map[node].kind != NodeKind.HOST:
                hops[node, flow.dst, flow.ttype][flow.src] = path.next_hop(node)

    for (node, dst, ttype), next_hops in sorted(hops.items()):
        if len(next_hops) == 1:
            (next_hop,) = next_hops.values()
            rules[node].append(f'at {node}: match(dst={dst}, type={ttype}) -> fwd({next_hop})')
            continue
        for src, next_hop in sorted(next_hops.items()):
            rules[node].append(f'at {node}: match(src={src}, dst={dst}, type={ttype}) -> fwd({next_hop})')

    return render_template('rules.sdn.j2', nodes=sorted(rules.items()))


def _record_row(record: IterationRecord) -> dict[str, str]:
    return {
        'iteration': str(record.index),
        'func_obj': fmt_num(record.func_obj),
        'func_obj_no_reward': fmt_num(record.func_obj_no_reward),
        'sec_obj': fmt_num(record.sec_obj),
        'overall_obj': fmt_num(record.overall_obj),
        'network_risk': fmt_num(record.network_risk),
        'served_flows': str(record.served_flows),
        'blocked_flows': str(record.blocked_flows),
        'firewalls': str(record.firewalls),
        'inspection_posts': str(record.inspection_posts),
        'nodes_explored': str(record.nodes_explored),
        'cut': record.trialed_cut or '',
        'judgement': record.judgement.value if record.judgement else '',
    }


def history_rows(history: Iterable[IterationRecord]) -> list[dict[str, str]]:
    return [_record_row(record) for record in history]


def render_report(result: RunResult) -> str:
    rows = history_rows(result.history)
    widths = {col: max([len(col), *(len(row[col]) for row in rows)]) for col in COLUMNS}
    best = result.best
    return render_template(
        'report.txt.j2',
        columns=COLUMNS,
        widths=widths,
        rows=rows,
        result=result,
        best=best,
        served=len(best.served_flows),
        blocked=len(best.blocked_flows),
        recovered=sorted(result.recovered_hosts()),
    )


def render_csv(result: RunResult) -> str:
    with StringIO(newline='') as f:
        writer = csv.DictWriter(f, COLUMNS, lineterminator='\n')
        writer.writeheader()
        writer.writerows(history_rows(result.history))
        return f.getvalue()


def render_iteration_dot(result: RunResult, index: int) -> str:
    """Render the physical topology with the given (1-based) iteration's placements and routing"""
    config = result.snapshots[index - 1]
    edge_annotations = {}
    for flow in config.served_flows:
        for edge in config.functional.active_paths[flow].edges:
            edge_annotations[edge] = SERVED_EDGE
    for flow in config.blocked_flows:
        for edge in config.functional.active_paths[flow].edges:
            edge_annotations.setdefault(edge, BLOCKED_EDGE)

    annotations = build_annotations(
        high_risk=result.high_risk_hosts,
        recovered=result.recovered_hosts(config),
        firewalls={node for node, _ in config.security.fw},
    )
    scenario = result.scenario
    return export_dot(scenario.nodes, scenario.edges, annotations, edge_annotations, name=f'iter{index}')


def write_outputs(result: RunResult, out_dir: Path | str, dot_every_iter: bool = False) -> list[Path]:
    """
    Write ``report.txt``, ``report.csv``, ``rules.sdn``, and ``iter<i>.dot`` files to the given directory.  Without
    ``dot_every_iter``, DOT files are only written for the first and the best iterations.

    :return: The paths of the files that were written
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    contents = {
        'report.txt': render_report(result),
        'report.csv': render_csv(result),
        'rules.sdn': emit_sdn_fragments(result),
    }
    indexes = range(1, len(result.snapshots) + 1) if dot_every_iter else sorted({1, result.best_index})
    for index in indexes:
        contents[f'iter{index}.dot'] = render_iteration_dot(result, index)

    written = []
    for name, content in contents.items():
        path = out_dir.joinpath(name)
        log.info(f'Writing {path.as_posix()}')
        path.write_text(content, 'utf-8', newline='\n')
        written.append(path)
    return written
