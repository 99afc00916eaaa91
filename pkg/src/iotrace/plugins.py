"""Pipeline plugins wrapping the analysis and optimization building blocks."""

from __future__ import annotations

import threading

from .analysis.histogram import RuntimeHistogram, SpeedCategory
from .analysis.reasoner import Scope, reason
from .analysis.survey import MiB, SurveyTable, survey_report
from .errors import BadOption, InsufficientSamples, UnknownId
from .optimize.readahead import ReadAheadAdvisor
from .pipeline import PLUGINS, Plugin, RingBufferForwarder, register_plugin
from .reporting import Report
from .tracefile import write_trace

register_plugin(RingBufferForwarder)
PLUGINS["RingBufferForwarder"] = RingBufferForwarder


@register_plugin
class FileSurveyor(Plugin):
    name = "FileSurveyor"
    defaults = {
        "short_seek_threshold": MiB,
        "max_files": 1024,
        "ops": None,
        "attributes": None,
        "keep_accesses": False,
    }

    def __init__(self, *args, **options):
        super().__init__(*args, **options)
        o = self.options
        try:
            self.table = SurveyTable(self.registry, o["ops"], o["attributes"], o["short_seek_threshold"],
                                     o["max_files"], o["keep_accesses"])
        except ValueError as exc:
            raise BadOption(self.name, str(exc), "invalid value:") from None
        self._lock = threading.Lock()

    def on_activity(self, activity):
        with self._lock:
            self.table.update(activity)

    def report(self):
        return survey_report(self.table, self.name, self.instance, self.component)


@register_plugin
class HistogramADPI(Plugin):
    """Learns the first ``learn`` durations per activity type, then categorizes.

    ``poll()`` hands the reasoner the category counts of the current cycle.
    """

    name = "HistogramADPI"
    defaults = {"learn": 100, "min_samples": 20, "capacity": 1000, "seed": 0}

    def __init__(self, *args, **options):
        super().__init__(*args, **options)
        o = self.options
        if o["learn"] < o["min_samples"]:
            raise BadOption(self.name, "learn", "must be at least min_samples:")
        self.hist = RuntimeHistogram(o["capacity"], o["min_samples"], o["seed"])
        self._learned: dict = {}
        self._cycle: dict = {c: 0 for c in SpeedCategory}
        self.totals: dict = {c: 0 for c in SpeedCategory}
        self._lock = threading.Lock()

    def on_activity(self, activity):
        key = (activity.component, activity.ucaid)
        with self._lock:
            seen = self._learned.get(key, 0)
            if seen < self.options["learn"]:
                self.hist.learn(key, activity.duration)
                self._learned[key] = seen + 1
                return
            try:
                cat = self.hist.categorize(key, activity.duration)
            except InsufficientSamples:
                return
            self._cycle[cat] += 1
            self.totals[cat] += 1

    def poll(self) -> dict:
        with self._lock:
            counts = dict(self._cycle)
            self._cycle = {c: 0 for c in SpeedCategory}
        return counts

    def report(self):
        r = Report(self.name, self.instance, self.component)
        for cat in SpeedCategory:
            r.set("categories", cat.label, self.totals[cat])
        return r


@register_plugin
class Reasoner(Plugin):
    """Polls the pipeline's ADPIs once per cycle of trace time and may signal an anomaly."""

    name = "Reasoner"
    defaults = {"role": "process", "trigger": 0.25, "min_activity": 10, "cycle_ns": 1_000_000_000}

    def __init__(self, *args, **options):
        super().__init__(*args, **options)
        try:
            self.role = Scope(self.options["role"])
        except ValueError:
            raise BadOption(self.name, "role", "must be process, node or system:") from None
        if self.options["cycle_ns"] <= 0:
            raise BadOption(self.name, "cycle_ns", "must be positive:")
        self.cycle_start: int | None = None
        self.cycles = 0
        self.signals: list = []
        self.neighbors: list = []
        self.last_health = None

    def on_activity(self, activity):
        if self.cycle_start is None:
            self.cycle_start = activity.t_start
        elif activity.t_start - self.cycle_start >= self.options["cycle_ns"]:
            self.run_cycle(activity.t_start)
            self.cycle_start = activity.t_start

    def run_cycle(self, t: int):
        adpis = self.pipeline.plugins(HistogramADPI) if self.pipeline else []
        health, signal = reason(
            self.role,
            [a.poll() for a in adpis],
            self.neighbors,
            self.options["trigger"],
            self.options["min_activity"],
            f"{self.name}:{self.instance}",
            t,
        )
        self.cycles += 1
        self.last_health = health
        if signal is not None:
            self.signals.append(signal)
            self.pipeline.signal_anomaly(signal)
        return health, signal

    def finish(self):
        if self.cycle_start is not None:
            self.run_cycle(self.cycle_start + self.options["cycle_ns"])
            self.cycle_start = None

    def report(self):
        r = Report(self.name, self.instance, self.component)
        r.set("reasoning", "Cycles", self.cycles)
        r.set("reasoning", "Anomaly signals", len(self.signals))
        return r


@register_plugin
class FadviseReadAhead(Plugin):
    """Tracks reads per (pid, handle) and records the read-ahead advice it would inject."""

    name = "FadviseReadAhead"
    defaults = {
        "threshold": 4,
        "read_ops": ("read", "pread", "pread64"),
        "handle": "POSIX/descriptor/filehandle",
        "position": "POSIX/file/position",
        "bytes": ("POSIX/quantity/BytesRead", "POSIX/quantity/BytesToRead"),
    }

    def __init__(self, *args, **options):
        super().__init__(*args, **options)
        self.advisor = ReadAheadAdvisor(self.options["threshold"])
        self.advice: list = []
        self._positions: dict = {}
        self._ids: dict = {}

    def _attr(self, activity, qualified):
        if qualified not in self._ids:
            try:
                self._ids[qualified] = self.registry.ontology.lookup_qualified(qualified).id
            except UnknownId:
                self._ids[qualified] = None
        attr_id = self._ids[qualified]
        return None if attr_id is None else activity.attr(attr_id)

    def on_activity(self, activity):
        op = self.registry.components.get(activity.component).ops[activity.ucaid]
        if op not in self.options["read_ops"]:
            return
        handle = (activity.aid.pid, self._attr(activity, self.options["handle"]))
        length = next((v for v in (self._attr(activity, q) for q in self.options["bytes"]) if v is not None), 0)
        offset = self._attr(activity, self.options["position"])
        if offset is None:
            offset = self._positions.get(handle, 0)
        self._positions[handle] = offset + length
        advice = self.advisor.observe(handle, offset, length)
        if advice is not None:
            self.advice.append((handle, advice))

    def report(self):
        r = Report(self.name, self.instance, self.component)
        r.set("read-ahead", "Advice issued", len(self.advice))
        return r


@register_plugin
class ActivityFileWriter(Plugin):
    """Writes every observed activity to a private trace file when the pipeline finishes."""

    name = "ActivityFileWriter"
    defaults = {"path": None}

    def __init__(self, *args, **options):
        super().__init__(*args, **options)
        if not self.options["path"]:
            raise BadOption(self.name, "path", "is required:")
        self.activities: list = []
        self._lock = threading.Lock()

    def on_activity(self, activity):
        with self._lock:
            self.activities.append(activity)

    def finish(self):
        write_trace(self.options["path"], self.activities, self.registry)
