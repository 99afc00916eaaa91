"""Unified activity model and the registries that give it stable ids.

An :class:`Activity` is one completed I/O call.  Attribute ids resolve
through the :class:`Ontology`, component/operation ids through
:class:`SystemInformation`; both are bundled, together with the run's
:class:`AssociationMap`, in a :class:`Registry`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Sequence

from .errors import BadParent, DatatypeConflict, NameCollision, TimeOrder, UnknownId

DATATYPES = ("int64", "uint64", "float64", "string")

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1
_UINT64_MAX = 2**64 - 1


class Aid(NamedTuple):
    """Activity id: (process id, per-process sequence number)."""

    pid: int
    seq: int

    def __str__(self):
        return f"ID{self.pid}.{self.seq}"


@dataclass(frozen=True)
class AttributeDef:
    id: int
    domain: str
    name: str
    datatype: str

    @property
    def qualified_name(self) -> str:
        return f"{self.domain}/{self.name}"


@dataclass(frozen=True)
class ComponentDescriptor:
    id: int
    layer: str
    ops: tuple[str, ...]

    @property
    def activity_types(self) -> dict[int, str]:
        return dict(enumerate(self.ops))

    def ucaid(self, op: str) -> int:
        try:
            return self.ops.index(op)
        except ValueError:
            raise UnknownId(f"component {self.layer!r} has no operation {op!r}") from None


@dataclass(frozen=True, slots=True)
class Activity:
    aid: Aid
    component: int
    ucaid: int
    t_start: int
    t_stop: int
    attributes: tuple[tuple[int, Any], ...] = ()
    parents: tuple[Aid, ...] = ()
    error: int = 0

    @property
    def duration(self) -> int:
        return self.t_stop - self.t_start

    def attr(self, attr_id: int, default=None):
        for aid, value in self.attributes:
            if aid == attr_id:
                return value
        return default

    def sort_key(self):
        return (self.t_start, self.aid.pid, self.aid.seq)


def check_value(datatype: str, value) -> None:
    """Raise ``TypeError``/``ValueError`` if *value* does not fit *datatype*."""
    if datatype == "string":
        if not isinstance(value, str):
            raise TypeError(f"expected string, got {type(value).__name__}")
    elif datatype == "float64":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"expected float64, got {type(value).__name__}")
    else:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"expected {datatype}, got {type(value).__name__}")
        lo, hi = (0, _UINT64_MAX) if datatype == "uint64" else (_INT64_MIN, _INT64_MAX)
        if not lo <= value <= hi:
            raise ValueError(f"{value} out of range for {datatype}")


class Ontology:
    """Registry of attribute definitions keyed by (domain, name)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._by_id: dict[int, AttributeDef] = {}
        self._by_name: dict[tuple[str, str], AttributeDef] = {}

    def register(self, domain: str, name: str, datatype: str) -> int:
        if not domain or not name:
            raise ValueError("attribute domain and name must be non-empty")
        if datatype not in DATATYPES:
            raise ValueError(f"unknown datatype {datatype!r}")
        with self._lock:
            existing = self._by_name.get((domain, name))
            if existing is not None:
                if existing.datatype != datatype:
                    raise DatatypeConflict(
                        f"{domain}/{name} registered as {existing.datatype}, not {datatype}"
                    )
                return existing.id
            attr = AttributeDef(len(self._by_id), domain, name, datatype)
            self._add(attr)
            return attr.id

    def _add(self, attr: AttributeDef) -> None:
        self._by_id[attr.id] = attr
        self._by_name[(attr.domain, attr.name)] = attr

    def get(self, attr_id: int) -> AttributeDef:
        try:
            return self._by_id[attr_id]
        except KeyError:
            raise UnknownId(f"unknown attribute id {attr_id}") from None

    def lookup(self, domain: str, name: str) -> AttributeDef:
        try:
            return self._by_name[(domain, name)]
        except KeyError:
            raise UnknownId(f"unknown attribute {domain}/{name}") from None

    def lookup_qualified(self, qualified: str) -> AttributeDef:
        domain, _, name = qualified.rpartition("/")
        return self.lookup(domain, name)

    def __iter__(self):
        return iter(sorted(self._by_id.values(), key=lambda a: a.id))

    def __len__(self):
        return len(self._by_id)


class SystemInformation:
    """Registry of instrumented components (layers) and their operations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._by_id: dict[int, ComponentDescriptor] = {}
        self._by_layer: dict[str, ComponentDescriptor] = {}

    def register(self, layer: str, ops: Sequence[str]) -> ComponentDescriptor:
        if not layer:
            raise ValueError("layer name must be non-empty")
        ops = tuple(ops)
        if not ops:
            raise ValueError("a component needs at least one operation")
        seen = set()
        for op in ops:
            if op in seen:
                raise NameCollision(f"duplicate operation {op!r} in component {layer!r}")
            seen.add(op)
        with self._lock:
            existing = self._by_layer.get(layer)
            if existing is not None:
                if existing.ops != ops:
                    raise NameCollision(f"component {layer!r} already registered with {existing.ops}")
                return existing
            desc = ComponentDescriptor(len(self._by_id), layer, ops)
            self._add(desc)
            return desc

    def _add(self, desc: ComponentDescriptor) -> None:
        self._by_id[desc.id] = desc
        self._by_layer[desc.layer] = desc

    def get(self, component_id: int) -> ComponentDescriptor:
        try:
            return self._by_id[component_id]
        except KeyError:
            raise UnknownId(f"unknown component id {component_id}") from None

    def lookup(self, layer: str) -> ComponentDescriptor:
        try:
            return self._by_layer[layer]
        except KeyError:
            raise UnknownId(f"unknown component {layer!r}") from None

    def __iter__(self):
        return iter(sorted(self._by_id.values(), key=lambda c: c.id))

    def __len__(self):
        return len(self._by_id)


class AssociationMap:
    """Write-once run information, e.g. ``(pid, "user-id") -> "alice"``."""

    def __init__(self):
        self._lock = threading.Lock()
        self._data: dict[tuple[int, str], Any] = {}

    def set(self, pid: int, key: str, value) -> None:
        with self._lock:
            if (pid, key) in self._data and self._data[(pid, key)] != value:
                raise ValueError(f"association {key!r} for process {pid} is already set")
            self._data[(pid, key)] = value

    def get(self, pid: int, key: str, default=None):
        return self._data.get((pid, key), default)

    def items(self):
        return sorted(self._data.items())

    def __eq__(self, other):
        return isinstance(other, AssociationMap) and self._data == other._data

    def __len__(self):
        return len(self._data)


@dataclass
class Registry:
    ontology: Ontology = field(default_factory=Ontology)
    components: SystemInformation = field(default_factory=SystemInformation)
    associations: AssociationMap = field(default_factory=AssociationMap)

    def register_attribute(self, domain: str, name: str, datatype: str) -> int:
        return self.ontology.register(domain, name, datatype)

    def register_component(self, layer: str, ops: Sequence[str]) -> ComponentDescriptor:
        return self.components.register(layer, ops)


# Attributes used by the bundled POSIX adapters and workload generators.
POSIX_ATTRIBUTES = {
    "filename": ("POSIX/descriptor", "filename", "string"),
    "filehandle": ("POSIX/descriptor", "filehandle", "uint64"),
    "bytes_to_write": ("POSIX/quantity", "BytesToWrite", "uint64"),
    "bytes_written": ("POSIX/quantity", "BytesWritten", "uint64"),
    "bytes_to_read": ("POSIX/quantity", "BytesToRead", "uint64"),
    "bytes_read": ("POSIX/quantity", "BytesRead", "uint64"),
    "position": ("POSIX/file", "position", "uint64"),
}
POSIX_OPS = ("open", "read", "write", "lseek", "close")


def register_posix(registry: Registry) -> tuple[ComponentDescriptor, dict[str, int]]:
    """Register the POSIX component and its standard attributes."""
    comp = registry.register_component("POSIX", POSIX_OPS)
    attrs = {key: registry.register_attribute(*spec) for key, spec in POSIX_ATTRIBUTES.items()}
    return comp, attrs


class ActivityBuilder:
    """Validates and sequences activities for a registry.

    Sequence numbers start at 1 and increase per process.  Parents must have
    been built by this builder (or announced with :meth:`known`).
    """

    def __init__(self, registry: Registry):
        self.registry = registry
        self._lock = threading.Lock()
        self._next_seq: dict[int, int] = {}
        self._starts: dict[Aid, int] = {}

    def known(self, activity: Activity) -> None:
        with self._lock:
            self._starts[activity.aid] = activity.t_start
            nxt = self._next_seq.get(activity.aid.pid, 1)
            self._next_seq[activity.aid.pid] = max(nxt, activity.aid.seq + 1)

    def build(
        self,
        component: int,
        ucaid: int,
        t_start: int,
        t_stop: int,
        attrs: Iterable[tuple[int, Any]] = (),
        parents: Iterable[Aid | Activity] = (),
        error: int = 0,
        pid: int = 0,
    ) -> Activity:
        desc = self.registry.components.get(component)
        if not 0 <= ucaid < len(desc.ops):
            raise UnknownId(f"component {desc.layer!r} has no activity type {ucaid}")
        attrs = tuple((int(a), v) for a, v in attrs)
        for attr_id, value in attrs:
            check_value(self.registry.ontology.get(attr_id).datatype, value)
        if t_start < 0 or t_stop < t_start:
            raise TimeOrder(f"t_stop {t_stop} precedes t_start {t_start}")
        parent_ids = tuple(p.aid if isinstance(p, Activity) else Aid(*p) for p in parents)
        with self._lock:
            for parent in parent_ids:
                started = self._starts.get(parent)
                if started is None:
                    raise BadParent(f"unknown parent {parent}")
                if started > t_start:
                    raise BadParent(f"parent {parent} starts after its child")
            seq = self._next_seq.get(pid, 1)
            self._next_seq[pid] = seq + 1
            aid = Aid(pid, seq)
            self._starts[aid] = t_start
        return Activity(aid, component, ucaid, t_start, t_stop, attrs, parent_ids, int(error))


def build_activity(builder: ActivityBuilder, component, ucaid, t_start, t_stop,
                   attrs=(), parents=(), error=0, pid=0) -> Activity:
    return builder.build(component, ucaid, t_start, t_stop, attrs, parents, error, pid)


@dataclass(frozen=True)
class ResolvedActivity:
    layer: str
    op: str
    attributes: list[tuple[str, Any]]


def resolve(activity: Activity, registry: Registry) -> ResolvedActivity:
    """Replace ids with the human-readable names they stand for."""
    desc = registry.components.get(activity.component)
    if not 0 <= activity.ucaid < len(desc.ops):
        raise UnknownId(f"component {desc.layer!r} has no activity type {activity.ucaid}")
    attrs = [
        (registry.ontology.get(attr_id).qualified_name, value)
        for attr_id, value in activity.attributes
    ]
    return ResolvedActivity(desc.layer, desc.ops[activity.ucaid], attrs)
