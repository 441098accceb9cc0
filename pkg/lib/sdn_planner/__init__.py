"""
Layered functional / security configuration optimizer for software-defined networks.

:author: Doug Skrypa
"""

from .exceptions import SdnPlannerError, ScenarioError, InfeasibleError, FrameworkAborted, SolverError
from .scenario import Scenario, Node, Edge, NodeKind, FlowSpec, parse_scenario, serialize_scenario, validate_scenario
from .topology import FatTreeSpec, gen_fat_tree, gen_toy, build_toy_scenario, build_fat_tree_scenario, export_dot
from .kpaths import Path, PathPool, build_pool, k_shortest_paths
from .functional import EquivalenceClass, SegregationRule, build_functional_model, solve_functional
from .risk import logical_topology, d_k, flow_risk, compute_risks, network_risk
from .security import build_security_model, solve_security
from .feedback import Cut, CutQueue, CutArbiter, Judgement, generate_candidates, judge_cut
from .coordinator import FrameworkLimits, RunResult, run_framework
from .output import emit_sdn_fragments, render_report, render_csv, write_outputs

__all__ = [
    'SdnPlannerError',
    'ScenarioError',
    'InfeasibleError',
    'FrameworkAborted',
    'SolverError',
    'Scenario',
    'Node',
    'Edge',
    'NodeKind',
    'FlowSpec',
    'parse_scenario',
    'serialize_scenario',
    'validate_scenario',
    'FatTreeSpec',
    'gen_fat_tree',
    'gen_toy',
    'build_toy_scenario',
    'build_fat_tree_scenario',
    'export_dot',
    'Path',
    'PathPool',
    'build_pool',
    'k_shortest_paths',
    'EquivalenceClass',
    'SegregationRule',
    'build_functional_model',
    'solve_functional',
    'logical_topology',
    'd_k',
    'flow_risk',
    'compute_risks',
    'network_risk',
    'build_security_model',
    'solve_security',
    'Cut',
    'CutQueue',
    'CutArbiter',
    'Judgement',
    'generate_candidates',
    'judge_cut',
    'FrameworkLimits',
    'RunResult',
    'run_framework',
    'emit_sdn_fragments',
    'render_report',
    'render_csv',
    'write_outputs',
]
