"""Storage latency model and the access-trace simulator.

An access that misses the advised-extent cache costs::

    c0 + (c1 * min(|seek|, d_max) if |seek| > near_bytes else 0) + length / bandwidth

where ``seek`` is the distance from the end of the previous access of the
same stream.  Seeks within ``near_bytes`` stay close on the device and do
not move the actuator.  An access fully inside a previously advised extent
costs ``hit_ns``; prefetching the extent happens off the critical path.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, Mapping

from ..errors import ModelError
from .hints import HintSet
from .readahead import StreamTracker
from .workload import IOAccess


@dataclass(frozen=True)
class StorageModel:
    c0_ns: float
    c1_ns_per_byte: float
    d_max: int
    bandwidth_bytes_per_ns: float
    hit_ns: float
    near_bytes: int = 0

    def __post_init__(self):
        for name in ("c0_ns", "c1_ns_per_byte", "d_max", "bandwidth_bytes_per_ns", "hit_ns"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ModelError(f"{name} must be a positive number, got {value!r}")
        if self.near_bytes < 0:
            raise ModelError("near_bytes must be non-negative")
        # advised hits must never be slower than the cheapest possible miss
        if self.hit_ns >= self.c0_ns:
            raise ModelError(f"hit_ns ({self.hit_ns}) must be below c0_ns ({self.c0_ns})")

    def positioning(self, seek: int) -> float:
        seek = abs(seek)
        if seek <= self.near_bytes:
            return self.c0_ns
        return self.c0_ns + self.c1_ns_per_byte * min(seek, self.d_max)

    def transfer(self, length: int) -> float:
        return length / self.bandwidth_bytes_per_ns

    def access_time(self, seek: int, length: int) -> float:
        return self.positioning(seek) + self.transfer(length)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, data: Mapping) -> "StorageModel":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ModelError(f"unknown model parameters: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ModelError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "StorageModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def default_model() -> StorageModel:
    text = resources.files("iotrace.data").joinpath("default_model.json").read_text(encoding="utf-8")
    return StorageModel.from_dict(json.loads(text))


def calibrate(
    regular_short_ns: float,
    regular_long_ns: float,
    advised_ns: float,
    access_size: int = 1024,
    short_stride: int = 20 * 1024,
    long_stride: int = 1000 * 1024,
    bandwidth_bytes_per_ns: float = 0.14,
    near_bytes: int = 128 * 1024,
    d_max: int = 2 * 1024 * 1024,
) -> StorageModel:
    """Solve the model parameters from regular and advised per-access times.

    The short stride must fall within ``near_bytes`` and the long one beyond
    it; ``bandwidth`` is taken as given.
    """
    short_gap = short_stride - access_size
    long_gap = long_stride - access_size
    if not short_gap <= near_bytes < long_gap <= d_max:
        raise ModelError("strides must straddle near_bytes and stay within d_max")
    transfer = access_size / bandwidth_bytes_per_ns
    c0 = regular_short_ns - transfer
    c1 = (regular_long_ns - regular_short_ns) / long_gap
    return StorageModel(c0, c1, d_max, bandwidth_bytes_per_ns, advised_ns, near_bytes)


@dataclass
class StreamResult:
    times: list[float] = field(default_factory=list)
    hits: list[bool] = field(default_factory=list)
    advice: int = 0

    @property
    def total(self) -> float:
        return math.fsum(self.times)

    @property
    def mean(self) -> float:
        return self.total / len(self.times) if self.times else 0.0

    def steady_state_mean(self) -> float:
        """Mean time of accesses from the first advised hit onwards."""
        try:
            first = self.hits.index(True)
        except ValueError:
            return self.mean
        tail = self.times[first:]
        return math.fsum(tail) / len(tail)


def hint_multiplier(hints: HintSet | None, effects: Mapping | None) -> float:
    """Throughput multiplier of a hint set: the product of matching effect entries.

    *effects* maps ``(hint name, value)`` to a multiplier.
    """
    if not hints or not effects:
        return 1.0
    mult = 1.0
    for item in hints.items():
        mult *= effects.get(item, 1.0)
    if mult <= 0:
        raise ModelError("hint multipliers must be positive")
    return mult


def simulate(trace: Iterable[IOAccess], model: StorageModel, advisor: StreamTracker | None = None,
             hints: HintSet | None = None, effects: Mapping | None = None) -> StreamResult:
    """Per-access service times of one access stream."""
    mult = hint_multiplier(hints, effects)
    result = StreamResult()
    starts: list[int] = []
    ends: list[int] = []
    prev_end = 0
    for acc in trace:
        offset, length = acc[0], acc[1]
        i = bisect.bisect_right(starts, offset) - 1
        if i >= 0 and ends[i] >= offset + length:
            del starts[i], ends[i]
            result.times.append(model.hit_ns)
            result.hits.append(True)
        else:
            result.times.append(model.access_time(offset - prev_end, length) / mult)
            result.hits.append(False)
        prev_end = offset + length
        if advisor is not None:
            advice = advisor.observe(offset, length)
            if advice is not None:
                result.advice += 1
                j = bisect.bisect_left(starts, advice.offset)
                if j < len(starts) and starts[j] == advice.offset:
                    ends[j] = max(ends[j], advice.offset + advice.length)
                else:
                    starts.insert(j, advice.offset)
                    ends.insert(j, advice.offset + advice.length)
    return result


@dataclass
class WorkloadResult:
    streams: dict[int, StreamResult]
    total_ns: float
    bytes: int

    @property
    def throughput(self) -> float:
        """Bytes per ns over the makespan."""
        return self.bytes / self.total_ns if self.total_ns else 0.0


def simulate_workload(traces: Mapping[int, list[IOAccess]], model: StorageModel, advisor_threshold: int | None = None,
                      hints: HintSet | None = None, effects: Mapping | None = None) -> WorkloadResult:
    """Simulate every process stream independently and combine them.

    Independent streams finish at the slowest process' total time.  Accesses
    tagged with a barrier round synchronize: each round lasts as long as its
    slowest member.
    """
    streams = {}
    for pid, accesses in sorted(traces.items()):
        tracker = StreamTracker(advisor_threshold) if advisor_threshold else None
        streams[pid] = simulate(accesses, model, tracker, hints, effects)
    collective = any(a.barrier is not None for accs in traces.values() for a in accs)
    if collective:
        rounds: dict[int, float] = {}
        for pid, accesses in traces.items():
            for acc, t in zip(accesses, streams[pid].times):
                key = acc.barrier if acc.barrier is not None else -1
                rounds[key] = max(rounds.get(key, 0.0), t)
        total = math.fsum(rounds.values())
    else:
        total = max((s.total for s in streams.values()), default=0.0)
    nbytes = sum(a.length for accs in traces.values() for a in accs)
    return WorkloadResult(streams, total, nbytes)
