"""End-of-run reports, cross-process aggregation and text rendering.

Rendered line grammar::

    [<plugin>:<instance>:"<component>"] <group-path>/<field> = (<avg>,<min>,<max>)

String-valued fields render as ``= "<text>"`` instead of a triple.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import TypeMismatch

Value = Union[int, float, str]


@dataclass
class Report:
    plugin: str
    instance: int
    component: str
    groups: dict[str, dict[str, Value]] = field(default_factory=dict)

    @property
    def source(self):
        return (self.plugin, self.instance, self.component)

    def set(self, group: str, name: str, value: Value) -> None:
        if isinstance(value, float) and not math.isfinite(value):
            raise ValueError(f"{group}/{name}: report values must be finite")
        self.groups.setdefault(group, {})[name] = value


@dataclass(frozen=True)
class AggregateEntry:
    avg: float
    min: float
    max: float
    count: int = 1


def sort_key(report: Report):
    return (report.component, report.plugin, report.instance)


def collect_reports(pipeline) -> list[Report]:
    """One report per plugin that has something to say, in (component, plugin, instance) order."""
    reports = []
    for plugin in pipeline.plugins():
        make = getattr(plugin, "report", None)
        if make is None:
            continue
        report = make()
        if report is not None:
            reports.append(report)
    return sorted(reports, key=sort_key)


def _numeric(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def aggregate(reports: Iterable[Report]) -> list[Report]:
    """Fold per-process reports into (avg, min, max) entries.

    Reports match on (component, plugin, instance); fields on (group, name).
    A field absent from some processes is aggregated over the processes that
    report it, and ``count`` records how many did. Already aggregated entries
    (from parsed output) fold again, weighted by their counts.
    """
    reports = list(reports)
    merged: dict[tuple, dict[str, dict[str, list]]] = {}
    for r in reports:
        slot = merged.setdefault((r.component, r.plugin, r.instance), {})
        for group, fields in r.groups.items():
            g = slot.setdefault(group, {})
            for name, value in fields.items():
                g.setdefault(name, []).append(value)

    out = []
    for (component, plugin, instance), groups in sorted(merged.items()):
        agg = Report(plugin, instance, component)
        for group, fields in groups.items():
            for name, values in fields.items():
                numeric = [_numeric(v) for v in values]
                if values and all(isinstance(v, AggregateEntry) for v in values):
                    # re-aggregating rendered reports: weight each average by its count
                    n = sum(v.count for v in values)
                    lo, hi = min(v.min for v in values), max(v.max for v in values)
                    avg = math.fsum(v.avg * v.count for v in values) / n
                    avg = min(max(avg, lo), hi)
                    agg.groups.setdefault(group, {})[name] = AggregateEntry(avg, lo, hi, n)
                elif all(numeric):
                    lo, hi = min(values), max(values)
                    avg = math.fsum(values) / len(values)
                    avg = min(max(avg, lo), hi)
                    agg.groups.setdefault(group, {})[name] = AggregateEntry(avg, lo, hi, len(values))
                elif any(numeric):
                    raise TypeMismatch(f"{group}/{name} mixes numeric and string values")
                elif len(set(values)) == 1:
                    agg.groups.setdefault(group, {})[name] = values[0]
        out.append(agg)
    return out


def format_number(x) -> str:
    """Shortest round-trip decimal; integral values print without a fraction."""
    if isinstance(x, int):
        return str(x)
    if x.is_integer() and abs(x) < 2**63:
        return str(int(x))
    return repr(x)


def _prefix(r: Report) -> str:
    return f'[{r.plugin}:{r.instance}:"{r.component}"]'


def render(reports: Report | Iterable[Report]) -> str:
    if isinstance(reports, Report):
        reports = [reports]
    lines = []
    for r in reports:
        prefix = _prefix(r)
        for group, fields in r.groups.items():
            for name, value in fields.items():
                if isinstance(value, AggregateEntry):
                    text = f"({format_number(value.avg)},{format_number(value.min)},{format_number(value.max)})"
                elif isinstance(value, str):
                    text = json.dumps(value, ensure_ascii=False)
                else:
                    text = f"({format_number(value)},{format_number(value)},{format_number(value)})"
                lines.append(f"{prefix} {group}/{name} = {text}")
    return "".join(line + "\n" for line in lines)


_LINE = re.compile(r'\[([^:\]]+):(-?\d+):"([^"]*)"\] (.*) = (.*)\Z')


def _split_path(path: str) -> tuple[str, str]:
    """Split ``<group>/<field>``; a quoted leading group may itself contain slashes."""
    if path.startswith('"'):
        end = path.index('"', 1)
        return path[: end + 1], path[end + 2 :]
    group, _, name = path.partition("/")
    return group, name


def _parse_number(text: str):
    return float(text) if any(c in text for c in ".eEn") else int(text)


def parse_rendered(text: str) -> list[Report]:
    """Inverse of :func:`render` (group order and field order are preserved)."""
    reports: dict[tuple, Report] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _LINE.match(line)
        if m is None:
            raise ValueError(f"not a report line: {line!r}")
        plugin, instance, component, path, value = m.groups()
        key = (plugin, int(instance), component)
        r = reports.setdefault(key, Report(plugin, int(instance), component))
        group, name = _split_path(path)
        if value.startswith('"'):
            parsed = json.loads(value)
        else:
            inner = value.strip("()").split(",")
            if len(inner) != 3:
                raise ValueError(f"expected (avg,min,max) in {line!r}")
            avg, lo, hi = (_parse_number(p) for p in inner)
            parsed = AggregateEntry(avg, lo, hi)
        r.groups.setdefault(group, {})[name] = parsed
    return list(reports.values())
