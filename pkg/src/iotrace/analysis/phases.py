"""I/O phase detection: maximal runs of accesses with the same class and direction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .survey import Access, AccessClass


@dataclass(frozen=True)
class Phase:
    file: str
    start: int  # index of first access, inclusive
    end: int  # index of last access, inclusive
    access_class: AccessClass
    direction: str
    weight: int  # bytes moved

    @property
    def length(self) -> int:
        return self.end - self.start + 1


def detect_phases(accesses: Iterable[Access], file: str | None = None) -> list[Phase]:
    phases: list[Phase] = []
    current = None
    for i, a in enumerate(accesses):
        key = (a.access_class, a.direction)
        if current is not None and current[0] == key:
            current[2] = i
            current[3] += a.length
        else:
            if current is not None:
                phases.append(_close(current, file))
            current = [key, i, i, a.length, file if file is not None else a.file]
    if current is not None:
        phases.append(_close(current, file))
    return phases


def _close(current, file):
    (cls, direction), start, end, weight, name = current
    return Phase(name, start, end, cls, direction, weight)


def phases_by_stream(accesses: Iterable[Access]) -> dict[tuple[int, str], list[Phase]]:
    """Group accesses per (pid, file) in time order and detect phases in each."""
    streams: dict[tuple[int, str], list[Access]] = {}
    for a in accesses:
        streams.setdefault((a.pid, a.file), []).append(a)
    return {key: detect_phases(stream, key[1]) for key, stream in sorted(streams.items())}
