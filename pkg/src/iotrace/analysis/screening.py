"""High-water-mark screening of per-job I/O statistics."""

from __future__ import annotations

import json
import operator
import re
from dataclasses import dataclass

from ..errors import IOTraceError, RuleSyntaxError

_OPS = {"<": operator.lt, ">": operator.gt, "<=": operator.le, ">=": operator.ge}
_RULE = re.compile(r"\s*([A-Za-z_][\w-]*)\s*(<=|>=|<|>)\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\Z")
FIELDS = ("opens", "reads", "writes", "bytes_r", "bytes_w", "avg_io_size")


@dataclass(frozen=True)
class JobStatsRow:
    job: str
    opens: int = 0
    reads: int = 0
    writes: int = 0
    bytes_r: int = 0
    bytes_w: int = 0

    @property
    def avg_io_size(self) -> float | None:
        ops = self.reads + self.writes
        if ops == 0:
            return None
        return (self.bytes_r + self.bytes_w) / ops


@dataclass(frozen=True)
class ScreeningRule:
    field: str
    op: str
    threshold: float
    text: str

    def matches(self, row: JobStatsRow) -> bool:
        value = getattr(row, self.field)
        if value is None:
            return False
        return _OPS[self.op](value, self.threshold)


@dataclass(frozen=True)
class Flag:
    job: str
    rules: tuple[str, ...]


def parse_rule(text: str) -> ScreeningRule:
    m = _RULE.match(text)
    if m is None:
        raise RuleSyntaxError(f"cannot parse rule {text!r}; expected 'field op value'")
    name, op, value = m.groups()
    name = name.replace("-", "_")
    if name not in FIELDS:
        raise RuleSyntaxError(f"unknown field {m.group(1)!r} in rule {text!r}")
    threshold = float(value) if any(c in value for c in ".eE") else int(value)
    return ScreeningRule(name, op, threshold, " ".join((m.group(1), op, value)))


def _job_key(job: str):
    return (0, int(job), "") if job.isdigit() else (1, 0, job)


def screen_jobs(rows, rules) -> list[Flag]:
    """Flag every job that satisfies at least one rule, sorted by job id."""
    rules = [parse_rule(r) if isinstance(r, str) else r for r in rules]
    if not rules:
        raise ValueError("at least one screening rule is required")
    flags = []
    for row in rows:
        hits = tuple(r.text for r in rules if r.matches(row))
        if hits:
            flags.append(Flag(row.job, hits))
    return sorted(flags, key=lambda f: _job_key(f.job))


def read_jobstats(path) -> list[JobStatsRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rows.append(JobStatsRow(
                    job=str(obj["job"]),
                    **{k: int(obj.get(k, 0)) for k in ("opens", "reads", "writes", "bytes_r", "bytes_w")},
                ))
            except (ValueError, KeyError, TypeError) as exc:
                raise IOTraceError(f"{path}:{lineno}: bad jobstats row: {exc}") from None
    return rows


def read_rules(path) -> list[ScreeningRule]:
    with open(path, encoding="utf-8") as fh:
        return [parse_rule(line) for line in fh if line.strip() and not line.lstrip().startswith("#")]
