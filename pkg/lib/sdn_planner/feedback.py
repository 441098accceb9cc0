"""
Result analysis: propose segregation cuts that would stop low-risk flows from being blocked alongside high-risk hosts,
and arbitrate which of them to keep based on the combined objective after re-optimization.

:author: Doug Skrypa
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from statistics import median
from typing import Callable, Iterable, Iterator

from .functional import EquivalenceClass, SegregationRule, FunctionalSolution
from .risk import FlowRisks
from .scenario import Scenario, FlowSpec, BASELINE_RISK
from .security import SecuritySolution
from .utils import join_members

__all__ = [
    'CutStatus',
    'Judgement',
    'Cut',
    'CutQueue',
    'CutArbiter',
    'generate_candidates',
    'judge_cut',
    'low_risk_flows',
    'high_risk_hosts',
    'EPS_IMPROVE',
]
log = logging.getLogger(__name__)

EPS_IMPROVE = 1e-6


class CutStatus(str, Enum):
    PENDING = 'pending'
    TRIALED = 'trialed'
    ACCEPTED = 'accepted'
    REVOKED = 'revoked'


class Judgement(str, Enum):
    BENEFICIAL = 'beneficial'
    HARMFUL = 'harmful'


@dataclass
class Cut:
    first: EquivalenceClass
    second: EquivalenceClass
    flow: FlowSpec
    high_risk: frozenset[str]
    score: float
    status: CutStatus = CutStatus.PENDING
    rule: SegregationRule = field(init=False)

    def __post_init__(self):
        if self.first.members & self.second.members:
            raise ValueError(f'The classes of a cut must not overlap: {self.first} / {self.second}')
        self.rule = SegregationRule.between(self.first, self.second)

    @property
    def key(self) -> frozenset[frozenset[str]]:
        return frozenset((self.first.members, self.second.members))

    @property
    def classes(self) -> tuple[EquivalenceClass, EquivalenceClass]:
        return self.first, self.second

    def __str__(self) -> str:
        return f'({join_members(self.first.members)})x({join_members(self.second.members)})'


# region Candidate Generation


def low_risk_flows(scenario: Scenario, risks: FlowRisks) -> frozenset[FlowSpec]:
    """
    Flows whose risk is strictly below the scenario's ``low_risk_threshold`` when one is configured; otherwise, flows
    whose risk is at most the median and strictly below the maximum.
    """
    if not risks.values:
        return frozenset()
    if (threshold := scenario.policy.low_risk_threshold) is not None:
        return frozenset(flow for flow, value in risks.values.items() if value < threshold)
    mid, top = median(risks.values.values()), risks.max
    return frozenset(flow for flow, value in risks.values.items() if value <= mid and value < top)


def high_risk_hosts(scenario: Scenario) -> tuple[str, ...]:
    """Hosts whose highest risk is above baseline and within ``high_risk_fraction`` of the riskiest host's"""
    host_risks = {host: scenario.max_risk(host) for host in scenario.hosts}
    if not host_risks:
        return ()
    threshold = scenario.policy.high_risk_fraction * max(host_risks.values())
    return tuple(h for h, risk in host_risks.items() if risk >= threshold and risk > BASELINE_RISK)


def generate_candidates(
    scenario: Scenario, func_sol: FunctionalSolution, sec_sol: SecuritySolution, risks: FlowRisks
) -> list[Cut]:
    """
    :param scenario: The problem instance
    :param func_sol: The current functional solution
    :param sec_sol: The current security solution
    :param risks: The risk of every active flow
    :return: Cuts separating each high-risk host from the host endpoints of every collaterally blocked low-risk flow
      whose active path it shares a node with, in descending order of blocked demand
    """
    if not sec_sol.blocked_flows or not (high_risk := high_risk_hosts(scenario)):
        return []

    low_risk = low_risk_flows(scenario, risks)
    hosts = frozenset(scenario.hosts)
    paths = func_sol.active_paths.values()
    reach = {h: frozenset().union(*(p.node_set for p in paths if h in p.node_set)) for h in high_risk}
    cuts = []
    for flow in sec_sol.blocked_flows:
        if flow not in low_risk:
            continue
        path = func_sol.active_paths[flow]
        endpoints = frozenset((flow.src, flow.dst)) & hosts
        for host in high_risk:
            if host in (flow.src, flow.dst) or not reach[host] & path.node_set:
                continue
            if not (second := endpoints - {host}):
                continue
            cut = Cut(EquivalenceClass.of((host,)), EquivalenceClass.of(second), flow, frozenset((host,)), flow.demand)
            log.log(19, f'Candidate cut {cut} for collaterally blocked flow {flow}')
            cuts.append(cut)

    cuts.sort(key=lambda c: (-c.score, c.first.id, c.second.id))
    seen = set()
    unique = []
    for cut in cuts:
        if cut.key not in seen:
            seen.add(cut.key)
            unique.append(cut)
    return unique


# endregion


def judge_cut(
    prev: tuple[float, float], curr: tuple[float, float], displaced: bool = False, eps: float = EPS_IMPROVE
) -> Judgement:
    """
    :param prev: The (functional objective without the cut reward, security objective) pair before the trial
    :param curr: The same pair after re-optimizing with the trialed cut
    :param displaced: Whether the trialed cut removed the incumbent configuration.  When True, a cut that does not
      worsen the overall objective is also beneficial.
    :param eps: Minimum improvement
    :return: Whether the cut was beneficial or harmful
    """
    before, after = sum(prev), sum(curr)
    if after < before - eps or (displaced and after <= before + eps):
        return Judgement.BENEFICIAL
    return Judgement.HARMFUL


class CutQueue:
    """Pending cuts in trial order; a cut that was ever proposed (including revoked ones) is never enqueued again"""

    __slots__ = ('_pending', '_proposed')

    def __init__(self, cuts: Iterable[Cut] = ()):
        self._pending: deque[Cut] = deque()
        self._proposed: set[frozenset[frozenset[str]]] = set()
        self.extend(cuts)

    def __len__(self) -> int:
        return len(self._pending)

    def __bool__(self) -> bool:
        return bool(self._pending)

    def __iter__(self) -> Iterator[Cut]:
        return iter(self._pending)

    def was_proposed(self, cut: Cut) -> bool:
        return cut.key in self._proposed

    def extend(self, cuts: Iterable[Cut]) -> int:
        added = 0
        for cut in cuts:
            if cut.key in self._proposed:
                log.log(19, f'Skipping previously proposed cut {cut}')
                continue
            self._proposed.add(cut.key)
            self._pending.append(cut)
            added += 1
        return added

    def pop(self) -> Cut | None:
        try:
            return self._pending.popleft()
        except IndexError:
            return None

    def clear(self):
        """Discard the pending cuts; they still count as proposed"""
        self._pending.clear()


class CutArbiter:
    """Tracks the one outstanding trial along with the accepted and revoked cuts"""

    def __init__(self):
        self.queue = CutQueue()
        self.accepted: list[Cut] = []
        self.revoked: list[Cut] = []
        self.trial: Cut | None = None
        self.trials = 0
        self.events: list[str] = []

    def __repr__(self) -> str:
        return (
            f'<{self.__class__.__name__}[pending={len(self.queue)}, accepted={len(self.accepted)},'
            f' revoked={len(self.revoked)}]>'
        )

    @property
    def classes(self) -> dict[str, EquivalenceClass]:
        cuts = [*self.accepted, self.trial] if self.trial else self.accepted
        return {cls.id: cls for cut in cuts for cls in cut.classes}

    @property
    def rules(self) -> tuple[SegregationRule, ...]:
        """The accepted rules, followed by the rule on trial (if any)"""
        cuts = [*self.accepted, self.trial] if self.trial else self.accepted
        return tuple(cut.rule for cut in cuts)

    def seed(self, cuts: Iterable[Cut]) -> int:
        return self.queue.extend(cuts)

    def next_trial(self) -> Cut | None:
        if self.trial is not None:
            raise RuntimeError(f'Cut {self.trial} is still on trial')
        if (cut := self.queue.pop()) is not None:
            cut.status = CutStatus.TRIALED
            self.trial = cut
            self.trials += 1
            log.debug(f'Trialing cut #{self.trials}: {cut} (score={cut.score:g})')
        return cut

    def step(self, judgement: Judgement, regenerate: Callable[[], Iterable[Cut]]) -> Cut | None:
        """
        Resolve the outstanding trial and start the next one.  An accepted cut stays in effect permanently and the
        queue is rebuilt from ``regenerate``; a revoked cut is dropped and the next pending cut is trialed.

        :return: The next cut on trial, or None if the queue is exhausted
        """
        if (cut := self.trial) is None:
            raise RuntimeError('There is no cut on trial')
        self.trial = None
        event = f'cut {self.trials} {cut} -> {judgement.value}'
        self.events.append(event)
        log.info(event)
        if judgement == Judgement.BENEFICIAL:
            cut.status = CutStatus.ACCEPTED
            self.accepted.append(cut)
            self.queue.clear()
            added = self.queue.extend(regenerate())
            log.debug(f'Regenerated the cut queue with {added} new candidates')
        else:
            cut.status = CutStatus.REVOKED
            self.revoked.append(cut)
        return self.next_trial()

    def cut_log(self) -> str:
        return '\n'.join(self.events) + '\n' if self.events else ''
