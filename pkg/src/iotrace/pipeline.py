"""Activity multiplexer, configuration-driven plugin loading and forwarding.

Every published activity goes through a per-component :class:`Multiplexer`.
Synchronous listeners run before ``publish`` returns and never lose an
activity.  Asynchronous listeners are fed from a bounded queue drained by a
single consumer; when the queue is full the newest activity is dropped and
counted.
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .errors import BadOption, ConfigError, UnknownId, UnknownPlugin
from .model import Activity, Registry

DEFAULT_QUEUE_CAPACITY = 4096
DEFAULT_RING_CAPACITY = 1024

PLUGINS: dict[str, type] = {}


def register_plugin(cls):
    PLUGINS[cls.name] = cls
    return cls


class Plugin:
    """Base class for pipeline plugins.

    Subclasses list their options with defaults in ``defaults``; unknown
    option keys are rejected with :class:`BadOption`.
    """

    name = "Plugin"
    defaults: dict[str, Any] = {}

    def __init__(self, instance: int = 0, component: str = "", registry: Registry | None = None,
                 pipeline: "Pipeline | None" = None, **options):
        for key in options:
            if key not in self.defaults:
                raise BadOption(self.name, key)
        self.instance = instance
        self.component = component
        self.registry = registry
        self.pipeline = pipeline
        self.options = {**self.defaults, **options}

    def on_activity(self, activity: Activity) -> None:
        pass

    def finish(self) -> None:
        pass

    def report(self):
        return None

    def __call__(self, activity):
        self.on_activity(activity)


@dataclass
class ListenerStats:
    name: str
    invocations: int = 0
    errors: int = 0
    time_ns: int = 0


class Multiplexer:
    def __init__(self, capacity: int = DEFAULT_QUEUE_CAPACITY):
        if capacity < 1:
            raise ConfigError("queue capacity must be at least 1")
        self.capacity = capacity
        self.sync: list[Callable] = []
        self.async_: list[Callable] = []
        self.stats: dict[int, ListenerStats] = {}
        self.queue: deque = deque()
        self.published = 0
        self.delivered = 0
        self.dropped = 0
        self.deliveries = 0
        self._lock = threading.Lock()
        self._drain_lock = threading.Lock()

    def add_listener(self, listener: Callable, asynchronous: bool = False, name: str | None = None) -> None:
        (self.async_ if asynchronous else self.sync).append(listener)
        self.stats[id(listener)] = ListenerStats(name or getattr(listener, "name", repr(listener)))

    def _invoke(self, listener, activity):
        stats = self.stats[id(listener)]
        start = time.perf_counter_ns()
        try:
            listener(activity)
        except Exception:
            failed = True
        else:
            failed = False
        elapsed = time.perf_counter_ns() - start
        with self._lock:
            stats.invocations += 1
            stats.time_ns += elapsed
            if failed:
                stats.errors += 1

    def publish(self, activity: Activity) -> None:
        with self._lock:
            self.published += 1
        for listener in self.sync:
            self._invoke(listener, activity)
        with self._lock:
            if not self.async_:
                self.delivered += 1
            elif len(self.queue) < self.capacity:
                self.queue.append(activity)
            else:
                self.dropped += 1

    def drain(self, limit: int | None = None) -> int:
        count = 0
        with self._drain_lock:
            while limit is None or count < limit:
                with self._lock:
                    if not self.queue:
                        break
                    activity = self.queue.popleft()
                for listener in self.async_:
                    self._invoke(listener, activity)
                with self._lock:
                    self.delivered += 1
                    self.deliveries += len(self.async_)
                count += 1
        return count

    @property
    def queued(self) -> int:
        return len(self.queue)


class RingBufferForwarder(Plugin):
    """Keeps the most recent activities; flushes them to a sink on an anomaly signal."""

    name = "ANetFWClient"
    defaults = {"capacity": None, "sink": None}

    def __init__(self, *args, sink=None, **options):
        super().__init__(*args, **options)
        capacity = self.options["capacity"]
        if capacity is None:
            capacity = self.pipeline.ring_capacity if self.pipeline else DEFAULT_RING_CAPACITY
        if not isinstance(capacity, int) or capacity < 1:
            raise BadOption(self.name, "capacity", "must be a positive integer:")
        self.capacity = capacity
        self.buffer: deque = deque(maxlen=capacity)
        self._lock = threading.Lock()
        # a configured sink is a file path; callers may also pass a sink object
        if sink is None:
            sink = self.options["sink"]
        if isinstance(sink, (str, os.PathLike)):
            sink = FileSink(sink, self.registry)
        self.sink = sink if sink is not None else MemorySink()
        self.flushed = 0
        self.signals = 0

    def on_activity(self, activity):
        with self._lock:
            self.buffer.append(activity)

    def on_anomaly(self, signal) -> list[Activity]:
        with self._lock:
            batch = list(self.buffer)
            self.buffer.clear()
            self.signals += 1
            self.flushed += len(batch)
        if batch:
            self.sink.receive(batch)
        return batch

    def report(self):
        from .reporting import Report

        r = Report(self.name, self.instance, self.component)
        r.set("forwarding", "Signals", self.signals)
        r.set("forwarding", "Activities forwarded", self.flushed)
        return r


def forward_on_anomaly(forwarder: RingBufferForwarder, signal) -> list[Activity]:
    return forwarder.on_anomaly(signal)


class MemorySink:
    def __init__(self):
        self.batches: list[list[Activity]] = []

    def receive(self, batch: list[Activity]) -> None:
        self.batches.append(list(batch))

    @property
    def activities(self) -> list[Activity]:
        return [a for b in self.batches for a in b]


class FileSink:
    """Accumulates forwarded batches and rewrites them as one trace file."""

    def __init__(self, path, registry: Registry | None):
        self.path = path
        self.registry = registry
        self.received: list[Activity] = []

    def receive(self, batch):
        from .tracefile import write_trace

        self.received.extend(batch)
        write_trace(self.path, self.received, self.registry or Registry(), partial=True)


@dataclass
class PipelineConfig:
    components: dict[str, list[dict]] = field(default_factory=dict)
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    ring_capacity: int = DEFAULT_RING_CAPACITY

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be an object")
        unknown = set(data) - {"global", "components"}
        if unknown:
            raise ConfigError(f"unknown configuration sections: {sorted(unknown)}")
        glob = data.get("global", {}) or {}
        unknown = set(glob) - {"queue_capacity", "ring_capacity"}
        if unknown:
            raise ConfigError(f"unknown global options: {sorted(unknown)}")
        components = {}
        for comp, section in (data.get("components") or {}).items():
            entries = []
            for entry in (section or {}).get("plugins", []):
                if isinstance(entry, str):
                    entry = {"name": entry}
                if not isinstance(entry, dict) or "name" not in entry:
                    raise ConfigError(f"component {comp!r}: plugin entries need a name")
                extra = set(entry) - {"name", "options", "async"}
                if extra:
                    raise ConfigError(f"plugin {entry['name']!r}: unknown keys {sorted(extra)}")
                entries.append(entry)
            components[comp] = entries
        cfg = cls(components, int(glob.get("queue_capacity", DEFAULT_QUEUE_CAPACITY)),
                  int(glob.get("ring_capacity", DEFAULT_RING_CAPACITY)))
        if cfg.queue_capacity < 1 or cfg.ring_capacity < 1:
            raise ConfigError("capacities must be at least 1")
        return cfg

    @classmethod
    def load(cls, path=None) -> "PipelineConfig":
        path = path or os.environ.get("IOTRACE_CONFIG")
        if not path:
            raise ConfigError("no configuration given and IOTRACE_CONFIG is unset")
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"invalid configuration {path}: {exc}") from None


@dataclass
class PipelineCounters:
    published: int = 0
    delivered: int = 0
    dropped: int = 0
    queued: int = 0
    listener_deliveries: int = 0
    invocations: dict[str, int] = field(default_factory=dict)
    errors: dict[str, int] = field(default_factory=dict)
    time_ns: dict[str, int] = field(default_factory=dict)

    @property
    def conserved(self) -> bool:
        return self.published == self.delivered + self.dropped + self.queued


class Pipeline:
    def __init__(self, registry: Registry, queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
                 ring_capacity: int = DEFAULT_RING_CAPACITY):
        self.registry = registry
        self.queue_capacity = queue_capacity
        self.ring_capacity = ring_capacity
        self.muxes: dict[str, Multiplexer] = {}
        self._plugins: list[Plugin] = []
        self._unrouted = 0
        self._lock = threading.Lock()
        self._worker: threading.Thread | None = None
        self._stop = threading.Event()

    def mux(self, component: str) -> Multiplexer:
        if component not in self.muxes:
            self.muxes[component] = Multiplexer(self.queue_capacity)
        return self.muxes[component]

    def add_plugin(self, plugin: Plugin, asynchronous: bool = False) -> Plugin:
        self._plugins.append(plugin)
        self.mux(plugin.component).add_listener(plugin, asynchronous, f"{plugin.name}:{plugin.instance}")
        return plugin

    def plugins(self, kind: type | None = None) -> list[Plugin]:
        if kind is None:
            return list(self._plugins)
        return [p for p in self._plugins if isinstance(p, kind)]

    def publish(self, activity: Activity) -> None:
        try:
            layer = self.registry.components.get(activity.component).layer
        except UnknownId:
            layer = None
        mux = self.muxes.get(layer)
        if mux is None:
            with self._lock:
                self._unrouted += 1
            return
        mux.publish(activity)

    def drain_async(self) -> int:
        return sum(mux.drain() for mux in self.muxes.values())

    def start(self, interval_s: float = 0.001) -> None:
        """Drain asynchronously on a background thread until :meth:`stop`."""
        if self._worker is not None:
            return
        self._stop.clear()

        def loop():
            while not self._stop.is_set():
                if not self.drain_async():
                    self._stop.wait(interval_s)

        self._worker = threading.Thread(target=loop, name="amux-async", daemon=True)
        self._worker.start()

    def stop(self) -> None:
        if self._worker is not None:
            self._stop.set()
            self._worker.join()
            self._worker = None

    def signal_anomaly(self, signal) -> None:
        for plugin in self._plugins:
            handler = getattr(plugin, "on_anomaly", None)
            if handler is not None:
                handler(signal)

    def finish(self) -> None:
        self.stop()
        self.drain_async()
        for plugin in self._plugins:
            plugin.finish()

    def counters(self) -> PipelineCounters:
        c = PipelineCounters(published=self._unrouted, delivered=self._unrouted)
        for mux in self.muxes.values():
            with mux._lock:
                c.published += mux.published
                c.delivered += mux.delivered
                c.dropped += mux.dropped
                c.queued += len(mux.queue)
                c.listener_deliveries += mux.deliveries
                for stats in mux.stats.values():
                    c.invocations[stats.name] = c.invocations.get(stats.name, 0) + stats.invocations
                    c.errors[stats.name] = c.errors.get(stats.name, 0) + stats.errors
                    c.time_ns[stats.name] = c.time_ns.get(stats.name, 0) + stats.time_ns
        return c


def load_pipeline(config: PipelineConfig | dict, registry: Registry, first_instance: int = 0) -> Pipeline:
    """Instantiate the configured plugins.

    Instance ids are assigned in configuration order starting at
    *first_instance*, so the same configuration yields the same ids in
    every process.
    """
    # plugin modules register themselves on import
    from . import plugins  # noqa: F401

    if isinstance(config, dict):
        config = PipelineConfig.from_dict(config)
    pipeline = Pipeline(registry, config.queue_capacity, config.ring_capacity)
    instance = first_instance
    for component, entries in config.components.items():
        for entry in entries:
            cls = PLUGINS.get(entry["name"])
            if cls is None:
                raise UnknownPlugin(entry["name"])
            options = entry.get("options") or {}
            if not isinstance(options, dict):
                raise BadOption(entry["name"], "options", "must be an object:")
            plugin = cls(instance, component, registry, pipeline, **options)
            pipeline.add_plugin(plugin, bool(entry.get("async", False)))
            instance += 1
    return pipeline


def publish(pipeline: Pipeline, activity: Activity) -> None:
    pipeline.publish(activity)


def drain_async(pipeline: Pipeline) -> int:
    return pipeline.drain_async()


def pipeline_report(pipeline: Pipeline) -> PipelineCounters:
    return pipeline.counters()


def replay(pipeline: Pipeline, activities: Iterable[Activity]) -> PipelineCounters:
    for activity in activities:
        pipeline.publish(activity)
    pipeline.finish()
    return pipeline.counters()
