"""Per-file access-pattern accounting (the FileSurveyor)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..errors import UnknownId
from ..model import Activity, Registry
from ..reporting import Report

MiB = 1024 * 1024
OVERFLOW_FILE = "ALL_OTHERS"


class AccessClass(enum.Enum):
    SEQUENTIAL = "sequential"
    RANDOM_SHORT = "random-short-seek"
    RANDOM_LONG = "random-long-seek"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    AccessClass.SEQUENTIAL: "Sequential",
    AccessClass.RANDOM_SHORT: "Random, short seek",
    AccessClass.RANDOM_LONG: "Random, long seek",
}


def classify_access(prev_end: int, offset: int, short_seek_threshold: int = MiB) -> AccessClass:
    if short_seek_threshold <= 0:
        raise ValueError("short seek threshold must be positive")
    if offset == prev_end:
        return AccessClass.SEQUENTIAL
    if abs(offset - prev_end) <= short_seek_threshold:
        return AccessClass.RANDOM_SHORT
    return AccessClass.RANDOM_LONG


DEFAULT_OPS = {
    "open": ("open", "open64", "creat", "MPI_File_open"),
    "read": ("read", "pread", "pread64", "MPI_File_read", "MPI_File_read_at"),
    "write": ("write", "pwrite", "pwrite64", "MPI_File_write", "MPI_File_write_at"),
    "seek": ("lseek", "lseek64", "MPI_File_seek"),
    "close": ("close", "MPI_File_close"),
}

DEFAULT_ATTRIBUTES = {
    "filename": "POSIX/descriptor/filename",
    "handle": "POSIX/descriptor/filehandle",
    "position": "POSIX/file/position",
    "read_bytes": ("POSIX/quantity/BytesRead", "POSIX/quantity/BytesToRead"),
    "write_bytes": ("POSIX/quantity/BytesWritten", "POSIX/quantity/BytesToWrite"),
}


@dataclass
class Access:
    """One classified data access, kept for phase detection."""

    pid: int
    file: str
    t: int
    offset: int
    length: int
    direction: str
    access_class: AccessClass
    seek: int


@dataclass
class DirectionStats:
    counts: dict = field(default_factory=lambda: {c: 0 for c in AccessClass})
    bytes: int = 0
    seek_total: int = 0

    @property
    def accesses(self) -> int:
        return sum(self.counts.values())


@dataclass
class FileStats:
    read: DirectionStats = field(default_factory=DirectionStats)
    write: DirectionStats = field(default_factory=DirectionStats)
    time: dict = field(default_factory=lambda: {k: 0 for k in ("open", "read", "write", "seek", "close")})


@dataclass
class _Handle:
    file: str
    position: int = 0
    prev_end: int = 0


class SurveyTable:
    """Counts sequential and random accesses per (file, direction).

    Handles are tracked per (pid, filehandle).  Data operations on a handle
    that was never opened are counted in ``unknown_handles`` and skipped.
    At most ``max_files`` files are tracked individually; the rest share the
    ``ALL_OTHERS`` row.
    """

    def __init__(self, registry: Registry, ops=None, attributes=None,
                 short_seek_threshold: int = MiB, max_files: int = 1024, keep_accesses: bool = False):
        if max_files < 1:
            raise ValueError("max_files must be at least 1")
        self.registry = registry
        ops = {**DEFAULT_OPS, **(ops or {})}
        self._op_class = {name: cls for cls, names in ops.items() for name in names}
        self.attributes = {**DEFAULT_ATTRIBUTES, **(attributes or {})}
        self.threshold = short_seek_threshold
        self.max_files = max_files
        self.keep_accesses = keep_accesses
        self.files: dict[str, FileStats] = {}
        self.handles: dict[tuple[int, object], _Handle] = {}
        self.accesses: list[Access] = []
        self.unknown_handles = 0
        self.ignored = 0
        self._attr_cache: dict = {}
        self._op_cache: dict = {}

    def _attr_id(self, qualified):
        if qualified not in self._attr_cache:
            try:
                self._attr_cache[qualified] = self.registry.ontology.lookup_qualified(qualified).id
            except UnknownId:
                self._attr_cache[qualified] = None
        return self._attr_cache[qualified]

    def _value(self, activity: Activity, key):
        names = self.attributes[key]
        if isinstance(names, str):
            names = (names,)
        for name in names:
            attr_id = self._attr_id(name)
            if attr_id is not None:
                value = activity.attr(attr_id)
                if value is not None:
                    return value
        return None

    def _classify_op(self, activity: Activity):
        key = (activity.component, activity.ucaid)
        if key not in self._op_cache:
            desc = self.registry.components.get(activity.component)
            self._op_cache[key] = self._op_class.get(desc.ops[activity.ucaid])
        return self._op_cache[key]

    def _file(self, name: str) -> FileStats:
        stats = self.files.get(name)
        if stats is None:
            if len(self.files) >= self.max_files and name != OVERFLOW_FILE:
                return self._file(OVERFLOW_FILE)
            stats = self.files[name] = FileStats()
        return stats

    def _file_key(self, name: str) -> str:
        if name in self.files or len(self.files) < self.max_files:
            return name
        return OVERFLOW_FILE

    def update(self, activity: Activity) -> None:
        kind = self._classify_op(activity)
        if kind is None:
            self.ignored += 1
            return
        pid = activity.aid.pid
        fh = self._value(activity, "handle")
        duration = activity.duration
        if kind == "open":
            name = self._value(activity, "filename")
            if name is None or fh is None:
                self.ignored += 1
                return
            key = self._file_key(name)
            self.handles[(pid, fh)] = _Handle(key)
            self._file(key).time["open"] += duration
            return
        handle = self.handles.get((pid, fh))
        if handle is None:
            self.unknown_handles += 1
            return
        stats = self._file(handle.file)
        stats.time[kind] += duration
        if kind == "close":
            del self.handles[(pid, fh)]
            return
        position = self._value(activity, "position")
        if kind == "seek":
            if position is not None:
                handle.position = position
            return
        length = self._value(activity, "read_bytes" if kind == "read" else "write_bytes") or 0
        offset = handle.position if position is None else position
        cls = classify_access(handle.prev_end, offset, self.threshold)
        d = stats.read if kind == "read" else stats.write
        d.counts[cls] += 1
        d.bytes += length
        seek = abs(offset - handle.prev_end)
        d.seek_total += seek
        handle.prev_end = handle.position = offset + length
        if self.keep_accesses:
            self.accesses.append(Access(pid, handle.file, activity.t_start, offset, length, kind, cls, seek))

    def report(self, plugin="FileSurveyor", instance=0, component="POSIX") -> Report:
        return survey_report(self, plugin, instance, component)


def survey_update(table: SurveyTable, activity: Activity) -> None:
    table.update(activity)


def _ratio(a, b):
    return a / b if b else 0


def survey_report(table: SurveyTable, plugin="FileSurveyor", instance=0, component="POSIX") -> Report:
    report = Report(plugin, instance, component)
    for name, s in table.files.items():
        group = f'"{name}"'
        accesses = s.read.accesses + s.write.accesses
        report.set(group, "Accesses", accesses)
        for label, d in (("Reading", s.read), ("Writing", s.write)):
            for cls in AccessClass:
                report.set(group, f"Accesses/{label}/{cls.label}", d.counts[cls])
        report.set(group, "Bytes", s.read.bytes + s.write.bytes)
        report.set(group, "Bytes/Read per access", _ratio(s.read.bytes, s.read.accesses))
        report.set(group, "Bytes/Write per access", _ratio(s.write.bytes, s.write.accesses))
        report.set(group, "Bytes/Total read", s.read.bytes)
        report.set(group, "Bytes/Total written", s.write.bytes)
        report.set(group, "Seek Distance/Average reading", _ratio(s.read.seek_total, s.read.accesses))
        report.set(group, "Seek Distance/Average writing", _ratio(s.write.seek_total, s.write.accesses))
        for op, label in (("open", "opening"), ("read", "reading"), ("write", "writing"),
                          ("seek", "seeking"), ("close", "closing")):
            report.set(group, f"Time/Total for {label}", s.time[op])
        report.set(group, "Time/Total surveyed", sum(s.time.values()))
    return report
