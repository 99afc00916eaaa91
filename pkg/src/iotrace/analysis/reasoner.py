"""Health verdicts from per-cycle speed-category aggregates.

The decision rule is a single threshold: signal an anomaly when the slow
and very-slow share of categorized activities reaches ``trigger`` and the
cycle saw at least ``min_activity`` activities.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .histogram import SpeedCategory


class Scope(enum.Enum):
    PROCESS = "process"
    NODE = "node"
    SYSTEM = "system"


@dataclass(frozen=True)
class AnomalySignal:
    scope: Scope
    severity: float
    reasoner: str
    cycle_t: int


@dataclass
class HealthReport:
    role: Scope
    counts: dict = field(default_factory=dict)
    healthy: bool = True

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def slow_fraction(self) -> float:
        total = self.total
        if not total:
            return 0.0
        slow = self.counts.get(SpeedCategory.SLOW, 0) + self.counts.get(SpeedCategory.VERY_SLOW, 0)
        return slow / total


def reason(
    role,
    aggregates: Iterable[Mapping],
    neighbor_reports: Iterable[HealthReport] = (),
    trigger: float = 0.25,
    min_activity: int = 10,
    reasoner_id: str = "reasoner",
    cycle_t: int = 0,
) -> tuple[HealthReport, AnomalySignal | None]:
    role = Scope(role)
    merged: Counter = Counter()
    for agg in aggregates:
        merged.update({SpeedCategory(k): v for k, v in agg.items()})
    for neighbor in neighbor_reports:
        merged.update(neighbor.counts)
    report = HealthReport(role, {c: merged.get(c, 0) for c in SpeedCategory})
    signal = None
    if report.total >= min_activity and report.slow_fraction >= trigger:
        report.healthy = False
        signal = AnomalySignal(role, report.slow_fraction, reasoner_id, cycle_t)
    return report, signal
