"""Human-readable one-line-per-activity rendering, and its inverse.

Line grammar::

    <seconds> <ID> <component> <op>(<attr>=<val>,...) = <err>[ <parent ID>...]

Seconds carry exactly seven decimals.  IDs are ``ID<pid>.<seq>``; traces
with a single process may use the short ``ID<seq>`` form.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Iterable

from .model import Activity, Aid, Registry, resolve

_ID = re.compile(r"ID(\d+)(?:\.(\d+))?\Z")
_HEAD = re.compile(r"(-?\d+\.\d{7}) (ID[\d.]+) (.+?) ([^\s(]+)\(")


def format_seconds(t_ns: int) -> str:
    """Nanoseconds to seconds with seven decimals, rounding half-even."""
    sign = "-" if t_ns < 0 else ""
    q, r = divmod(abs(t_ns), 100)
    if r > 50 or (r == 50 and q % 2):
        q += 1
    return f"{sign}{q // 10**7}.{q % 10**7:07d}"


def parse_seconds(text: str) -> int:
    sign = -1 if text.startswith("-") else 1
    whole, frac = text.lstrip("-").split(".")
    return sign * (int(whole) * 10**9 + int(frac) * 100)


def format_id(aid: Aid, short: bool = False) -> str:
    return f"ID{aid.seq}" if short else f"ID{aid.pid}.{aid.seq}"


def parse_id(text: str, default_pid: int = 0) -> Aid:
    m = _ID.match(text)
    if m is None:
        raise ValueError(f"bad activity id {text!r}")
    if m.group(2) is None:
        return Aid(default_pid, int(m.group(1)))
    return Aid(int(m.group(1)), int(m.group(2)))


def format_value(value) -> str:
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    return repr(value)


def format_activity(activity: Activity, registry: Registry, short_ids: bool = False, epoch_ns: int = 0) -> str:
    r = resolve(activity, registry)
    args = ",".join(f"{name}={format_value(value)}" for name, value in r.attributes)
    line = (
        f"{format_seconds(activity.t_start - epoch_ns)} {format_id(activity.aid, short_ids)} "
        f"{r.layer} {r.op}({args}) = {activity.error}"
    )
    for parent in activity.parents:
        line += " " + format_id(parent, short_ids)
    return line


def format_trace(activities: Iterable[Activity], registry: Registry, id_form: str = "auto",
                 epoch_ns: int = 0) -> list[str]:
    activities = list(activities)
    if id_form == "auto":
        pids = {a.aid.pid for a in activities} | {p.pid for a in activities for p in a.parents}
        short = len(pids) <= 1
    else:
        short = id_form == "short"
    return [format_activity(a, registry, short, epoch_ns) for a in activities]


@dataclass(frozen=True)
class PrintedActivity:
    t_start: int
    aid: Aid
    component: str
    op: str
    attributes: list[tuple[str, Any]]
    error: int
    parents: list[Aid]


def _scan_args(text: str, pos: int) -> tuple[list[tuple[str, Any]], int]:
    """Parse ``name=value,...)`` starting at *pos*; return attrs and index after ')'."""
    attrs = []
    decoder = json.JSONDecoder()
    if text.startswith(")", pos):
        return attrs, pos + 1
    while True:
        eq = text.index("=", pos)
        name = text[pos:eq]
        pos = eq + 1
        if text.startswith('"', pos):
            value, pos = decoder.raw_decode(text, pos)
        else:
            m = re.compile(r"[^,)]+").match(text, pos)
            if m is None:
                raise ValueError(f"missing value for {name!r}")
            raw = m.group(0)
            value = float(raw) if any(c in raw for c in ".eEn") else int(raw)
            pos = m.end()
        attrs.append((name, value))
        if text.startswith(",", pos):
            pos += 1
        elif text.startswith(")", pos):
            return attrs, pos + 1
        else:
            raise ValueError(f"unexpected character at column {pos}")


def parse_line(line: str, default_pid: int = 0) -> PrintedActivity:
    m = _HEAD.match(line)
    if m is None:
        raise ValueError(f"not a trace line: {line!r}")
    attrs, pos = _scan_args(line, m.end())
    tail = line[pos:]
    if not tail.startswith(" = "):
        raise ValueError("missing error code")
    parts = tail[3:].split(" ")
    return PrintedActivity(
        t_start=parse_seconds(m.group(1)),
        aid=parse_id(m.group(2), default_pid),
        component=m.group(3),
        op=m.group(4),
        attributes=attrs,
        error=int(parts[0]),
        parents=[parse_id(p, default_pid) for p in parts[1:]],
    )
