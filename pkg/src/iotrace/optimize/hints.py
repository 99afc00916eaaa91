"""Learning which hint set performed best for a kind of access (GenericHistory)."""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from ..errors import BadDuration


class HintSet:
    """Immutable, canonically ordered mapping of hint name to string value."""

    __slots__ = ("_items",)

    def __init__(self, hints: Mapping[str, object] | None = None, **kwargs):
        merged = {**(hints or {}), **kwargs}
        self._items = tuple(sorted((str(k), str(v)) for k, v in merged.items()))

    def items(self):
        return self._items

    def as_dict(self) -> dict[str, str]:
        return dict(self._items)

    def __eq__(self, other):
        return isinstance(other, HintSet) and self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        return f"HintSet({dict(self._items)!r})"


@dataclass(frozen=True)
class HintKey:
    op_class: str
    user_id: str = ""
    extension: str = ""

    def __post_init__(self):
        ext = self.extension.lower()
        if ext and not ext.startswith("."):
            ext = "." + ext
        object.__setattr__(self, "extension", ext)

    @classmethod
    def for_file(cls, op_class: str, user_id, filename: str) -> "HintKey":
        return cls(op_class, str(user_id), os.path.splitext(filename)[1])


@dataclass
class PerfRecord:
    count: int
    total: Fraction  # sum of throughputs, bytes/ns
    last: Fraction
    last_seen: int

    @property
    def mean(self) -> Fraction:
        return self.total / self.count


class HistoryStore:
    def __init__(self):
        self.records: dict[HintKey, dict[HintSet, PerfRecord]] = {}
        self._clock = 0

    def observe(self, key: HintKey, hints: HintSet, nbytes: int, duration_ns) -> None:
        if duration_ns <= 0:
            raise BadDuration(f"duration must be positive, got {duration_ns}")
        throughput = Fraction(nbytes) / Fraction(duration_ns)
        self._clock += 1
        per_key = self.records.setdefault(key, {})
        rec = per_key.get(hints)
        if rec is None:
            per_key[hints] = PerfRecord(1, throughput, throughput, self._clock)
        else:
            rec.count += 1
            rec.total += throughput
            rec.last = throughput
            rec.last_seen = self._clock

    def best(self, key: HintKey, learning_min: int = 3) -> HintSet | None:
        candidates = [
            (rec.mean, rec.last_seen, hints)
            for hints, rec in self.records.get(key, {}).items()
            if rec.count >= learning_min
        ]
        if not candidates:
            return None
        return max(candidates, key=lambda c: (c[0], c[1]))[2]


def history_observe(store: HistoryStore, key: HintKey, hints: HintSet, nbytes, duration_ns) -> None:
    store.observe(key, hints, nbytes, duration_ns)


def best_hints(store: HistoryStore, key: HintKey, learning_min: int = 3) -> HintSet | None:
    return store.best(key, learning_min)
