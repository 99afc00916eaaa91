"""System statistics: providers, the polling collector and multi-resolution history.

Each metric keeps five levels of ten samples.  Level 0 receives raw
samples (100 ms cadence); every ten completed level-k samples produce one
level-(k+1) sample: the mean for gauges, the sum for counter deltas.
Partially filled windows are never visible at the next level.
"""

from __future__ import annotations

import enum
import json
import math
import random
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

from .errors import BadCapacity, BadLevel, TimeRegression

LEVELS = 5
SAMPLES_PER_LEVEL = 10
LEVEL_PERIODS_NS = (100_000_000, 1_000_000_000, 10_000_000_000, 60_000_000_000, 600_000_000_000)


class Semantics(enum.Enum):
    GAUGE = "gauge"
    COUNTER_DELTA = "counter-delta"


@dataclass(frozen=True)
class Metric:
    id: int
    name: str
    semantics: Semantics
    unit: str = ""


class Sample(NamedTuple):
    t: int  # start of the covered window, ns
    value: float


def aggregate_window(values: list[float], semantics: Semantics) -> float:
    total = math.fsum(values)
    return total if semantics is Semantics.COUNTER_DELTA else total / len(values)


class _MetricHistory:
    __slots__ = ("metric", "levels", "pending", "last_t")

    def __init__(self, metric: Metric):
        self.metric = metric
        self.levels = [deque(maxlen=SAMPLES_PER_LEVEL) for _ in range(LEVELS)]
        # samples completed at each level since that level last emitted upward
        self.pending = [0] * LEVELS
        self.last_t: int | None = None


class MultiResolutionHistory:
    def __init__(self):
        self._lock = threading.Lock()
        self._metrics: dict[str, Metric] = {}
        self._histories: dict[str, _MetricHistory] = {}

    def register(self, name: str, semantics=Semantics.GAUGE, unit: str = "") -> Metric:
        semantics = Semantics(semantics)
        with self._lock:
            metric = self._metrics.get(name)
            if metric is not None:
                if metric.semantics is not semantics:
                    raise ValueError(f"metric {name!r} already registered as {metric.semantics.value}")
                return metric
            metric = Metric(len(self._metrics), name, semantics, unit)
            self._metrics[name] = metric
            self._histories[name] = _MetricHistory(metric)
            return metric

    def metric(self, name: str) -> Metric:
        return self._metrics[name]

    @property
    def metrics(self) -> list[Metric]:
        return list(self._metrics.values())

    def record(self, metric, value: float, t: int) -> None:
        name = metric.name if isinstance(metric, Metric) else metric
        with self._lock:
            h = self._histories.get(name)
            if h is None:
                raise KeyError(f"unregistered metric {name!r}")
            if h.last_t is not None and t < h.last_t:
                raise TimeRegression(f"{name}: sample at {t} precedes {h.last_t}")
            h.last_t = t
            sample = Sample(t, float(value))
            for level in range(LEVELS):
                h.levels[level].append(sample)
                if level == LEVELS - 1:
                    break
                h.pending[level] += 1
                if h.pending[level] < SAMPLES_PER_LEVEL:
                    break
                h.pending[level] = 0
                window = list(h.levels[level])
                sample = Sample(window[0].t, aggregate_window([s.value for s in window], h.metric.semantics))

    def query(self, metric, level: int, last_k: int = SAMPLES_PER_LEVEL) -> list[Sample]:
        """Up to *last_k* samples of *level*, newest first."""
        if not isinstance(level, int) or not 0 <= level < LEVELS:
            raise BadLevel(f"level must be in 0..{LEVELS - 1}, got {level!r}")
        if not 0 <= last_k <= SAMPLES_PER_LEVEL:
            raise ValueError(f"last_k must be in 0..{SAMPLES_PER_LEVEL}")
        name = metric.name if isinstance(metric, Metric) else metric
        with self._lock:
            samples = list(self._histories[name].levels[level])
        samples.reverse()
        return samples[:last_k]

    def stored(self, metric) -> int:
        name = metric.name if isinstance(metric, Metric) else metric
        return sum(len(level) for level in self._histories[name].levels)


def record(history: MultiResolutionHistory, metric, value: float, t: int) -> None:
    history.record(metric, value, t)


def query(history: MultiResolutionHistory, metric, level: int, last_k: int = SAMPLES_PER_LEVEL) -> list[Sample]:
    return history.query(metric, level, last_k)


# providers


class Provider:
    """Something that can be polled for ``(metric name, value)`` pairs."""

    name = "provider"
    metrics: dict[str, Semantics] = {}

    def poll(self, t: int) -> list[tuple[str, float]]:
        raise NotImplementedError


class SyntheticProvider(Provider):
    """Seeded generator: ``fn(t, rng)`` returns the value of each metric."""

    def __init__(self, name: str, metrics: dict[str, Semantics], fn: Callable | None = None, seed: int = 0):
        self.name = name
        self.metrics = {k: Semantics(v) for k, v in metrics.items()}
        self._rng = random.Random(seed)
        self._fn = fn or (lambda t, rng: rng.random())

    def poll(self, t):
        return [(metric, float(self._fn(t, self._rng))) for metric in self.metrics]


class ReplayProvider(Provider):
    """Replays a sample-batch file: one ``{"t", "metric", "value"}`` object per line.

    ``poll(t)`` returns every not yet replayed sample with timestamp <= t.
    """

    def __init__(self, path, name: str = "replay", semantics: dict[str, Semantics] | None = None):
        self.name = name
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    rows.append((int(obj["t"]), obj["metric"], float(obj["value"])))
        rows.sort(key=lambda r: r[0])
        self._rows = rows
        self._next = 0
        semantics = semantics or {}
        self.metrics = {m: Semantics(semantics.get(m, Semantics.GAUGE)) for _, m, _ in rows}

    def poll(self, t):
        out = []
        while self._next < len(self._rows) and self._rows[self._next][0] <= t:
            _, metric, value = self._rows[self._next]
            out.append((metric, value))
            self._next += 1
        return out


class CollectedSample(NamedTuple):
    metric_id: int
    metric: str
    t: int
    value: float


@dataclass
class StatisticsCollector:
    history: MultiResolutionHistory = field(default_factory=MultiResolutionHistory)
    providers: list[Provider] = field(default_factory=list)
    errors: dict[str, int] = field(default_factory=dict)
    listeners: list[Callable] = field(default_factory=list)

    def register(self, provider: Provider) -> None:
        for name, sem in provider.metrics.items():
            self.history.register(name, sem)
        self.providers.append(provider)

    def collect(self, t: int, providers: Iterable[Provider] | None = None) -> list[CollectedSample]:
        batch = []
        for provider in (self.providers if providers is None else providers):
            try:
                polled = provider.poll(t)
            except Exception:
                self.errors[provider.name] = self.errors.get(provider.name, 0) + 1
                continue
            for name, value in polled:
                metric = self.history.register(name, provider.metrics.get(name, Semantics.GAUGE))
                self.history.record(metric, value, t)
                batch.append(CollectedSample(metric.id, name, t, value))
        for listener in self.listeners:
            listener(batch)
        return batch

    @property
    def error_count(self) -> int:
        return sum(self.errors.values())


def collect(collector: StatisticsCollector, providers, t: int) -> list[CollectedSample]:
    return collector.collect(t, providers)


# qualitative utilization


@dataclass(frozen=True)
class UtilizationSummary:
    cpu: float
    memory: float
    io: float
    network: float


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def summarize_utilization(snapshot: dict, capacities: dict) -> UtilizationSummary:
    """Reduce raw resource statistics to four utilization fractions.

    snapshot keys: ``cpu_busy``, ``cpu_total`` (time), ``mem_used``,
    ``io_bytes_per_s``, ``net_bytes_per_s``; capacities: ``mem_total``,
    ``io_bytes_per_s``, ``net_bytes_per_s``.
    """
    for key in ("mem_total", "io_bytes_per_s", "net_bytes_per_s"):
        if not capacities.get(key, 0) > 0:
            raise BadCapacity(f"capacity {key!r} must be positive")
    cpu_total = snapshot.get("cpu_total", 0)
    cpu = snapshot.get("cpu_busy", 0) / cpu_total if cpu_total > 0 else 0.0
    return UtilizationSummary(
        cpu=_clamp(cpu),
        memory=_clamp(snapshot.get("mem_used", 0) / capacities["mem_total"]),
        io=_clamp(snapshot.get("io_bytes_per_s", 0) / capacities["io_bytes_per_s"]),
        network=_clamp(snapshot.get("net_bytes_per_s", 0) / capacities["net_bytes_per_s"]),
    )


class QualitativeUtilization(Provider):
    """Listens to collected batches and provides the four utilization percentages.

    ``sources`` maps snapshot keys (see :func:`summarize_utilization`) to
    metric names of other providers.
    """

    name = "QualitativeUtilization"
    metrics = {f"utilization/{k}": Semantics.GAUGE for k in ("cpu", "memory", "io", "network")}

    def __init__(self, sources: dict[str, str], capacities: dict):
        self.sources = sources
        self.capacities = capacities
        self._latest: dict[str, float] = {}

    def __call__(self, batch):
        for s in batch:
            self._latest[s.metric] = s.value

    def poll(self, t):
        snapshot = {key: self._latest.get(metric, 0.0) for key, metric in self.sources.items()}
        u = summarize_utilization(snapshot, self.capacities)
        return [(f"utilization/{k}", getattr(u, k)) for k in ("cpu", "memory", "io", "network")]


def run_live(collector: StatisticsCollector, stop: threading.Event, period_ns: int = LEVEL_PERIODS_NS[0],
             clock: Callable[[], int] | None = None) -> threading.Thread:
    """Poll *collector* every *period_ns* on a background thread until *stop* is set."""
    import time

    clock = clock or time.monotonic_ns

    def loop():
        while not stop.is_set():
            collector.collect(clock())
            stop.wait(period_ns / 1e9)

    thread = threading.Thread(target=loop, name="statistics-collector", daemon=True)
    thread.start()
    return thread
