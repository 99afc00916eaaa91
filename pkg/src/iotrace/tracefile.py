"""Line-oriented persistent trace format.

The first line is a header object, followed by one object per activity.
Every line carries a trailing ``"crc"`` member holding the CRC-32 of the
line bytes that precede it, so a corrupted byte is always reported rather
than silently decoded into a different value.
"""

from __future__ import annotations

import json
import math
import re
import zlib
from dataclasses import dataclass, field
from typing import Iterable

from .errors import FormatError, IOTraceError
from .model import (
    Activity,
    Aid,
    AssociationMap,
    AttributeDef,
    ComponentDescriptor,
    Registry,
    check_value,
)

FORMAT_VERSION = 1
_CRC_SUFFIX = re.compile(rb',"crc":"([0-9a-f]{8})"\}\Z')


@dataclass
class Trace:
    registry: Registry
    activities: list[Activity] = field(default_factory=list)
    epoch_ns: int = 0
    partial: bool = False


def _encode_line(obj: dict) -> bytes:
    text = json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    body = text[:-1].encode("utf-8")
    return body + b',"crc":"%08x"}\n' % zlib.crc32(body)


def _header(registry: Registry, epoch_ns: int, count: int, partial: bool = False) -> dict:
    assoc: dict[str, dict] = {}
    for (pid, key), value in registry.associations.items():
        assoc.setdefault(str(pid), {})[key] = value
    return {
        "version": FORMAT_VERSION,
        "epoch_ns": epoch_ns,
        "count": count,
        "attributes": [
            {"id": a.id, "domain": a.domain, "name": a.name, "datatype": a.datatype}
            for a in registry.ontology
        ],
        "components": [{"id": c.id, "layer": c.layer, "ops": list(c.ops)} for c in registry.components],
        "associations": assoc,
        "partial": partial,
    }


def activity_record(a: Activity) -> dict:
    return {
        "aid": [a.aid.pid, a.aid.seq],
        "comp": a.component,
        "ucaid": a.ucaid,
        "t0": a.t_start,
        "t1": a.t_stop,
        "attrs": [[attr_id, value] for attr_id, value in a.attributes],
        "parents": [[p.pid, p.seq] for p in a.parents],
        "err": a.error,
    }


def write_trace(path, activities: Iterable[Activity], registry: Registry, epoch_ns: int = 0,
                partial: bool = False) -> None:
    """Write a trace file.

    A *partial* trace is a window of a longer run: its activities may name
    parents that are not in the file.
    """
    ordered = sorted(activities, key=Activity.sort_key)
    try:
        with open(path, "wb") as fh:
            fh.write(_encode_line(_header(registry, epoch_ns, len(ordered), partial)))
            for a in ordered:
                fh.write(_encode_line(activity_record(a)))
    except OSError as exc:
        raise IOTraceError(f"cannot write trace {path}: {exc}") from exc


def _decode_line(line: bytes, offset: int) -> dict:
    m = _CRC_SUFFIX.search(line)
    if m is None:
        raise FormatError("record lacks checksum", offset)
    body = line[: m.start()]
    if zlib.crc32(body) != int(m.group(1), 16):
        raise FormatError("checksum mismatch", offset)
    try:
        obj = json.loads(body + b"}")
    except (ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"invalid record: {exc}", offset) from None
    if not isinstance(obj, dict):
        raise FormatError("record is not an object", offset)
    return obj


def _int(value, what, offset):
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{what} must be an integer", offset)
    return value


def _registry_from_header(hdr: dict, offset: int) -> Registry:
    reg = Registry()
    try:
        for a in hdr["attributes"]:
            attr = AttributeDef(_int(a["id"], "attribute id", offset), a["domain"], a["name"], a["datatype"])
            reg.ontology._add(attr)
        for c in hdr["components"]:
            desc = ComponentDescriptor(_int(c["id"], "component id", offset), c["layer"], tuple(c["ops"]))
            reg.components._add(desc)
        assoc = AssociationMap()
        for pid, values in hdr["associations"].items():
            for key, value in values.items():
                assoc.set(int(pid), key, value)
        reg.associations = assoc
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise FormatError(f"bad header: {exc}", offset) from None
    return reg


def _decode_activity(rec: dict, reg: Registry, offset: int) -> Activity:
    try:
        pid, seq = rec["aid"]
        comp = _int(rec["comp"], "comp", offset)
        ucaid = _int(rec["ucaid"], "ucaid", offset)
        t0 = _int(rec["t0"], "t0", offset)
        t1 = _int(rec["t1"], "t1", offset)
        err = _int(rec["err"], "err", offset)
        attrs = []
        for attr_id, value in rec["attrs"]:
            attr = reg.ontology.get(_int(attr_id, "attribute id", offset))
            check_value(attr.datatype, value)
            if isinstance(value, float) and not math.isfinite(value):
                raise ValueError("non-finite attribute value")
            attrs.append((attr_id, value))
        parents = tuple(Aid(_int(p, "parent pid", offset), _int(s, "parent seq", offset))
                        for p, s in rec["parents"])
        desc = reg.components.get(comp)
        if not 0 <= ucaid < len(desc.ops):
            raise ValueError(f"unknown activity type {ucaid}")
        if len(rec) != 8:
            raise ValueError("unexpected record members")
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, IOTraceError) as exc:
        raise FormatError(f"bad activity record: {exc}", offset) from None
    aid = Aid(_int(pid, "pid", offset), _int(seq, "seq", offset))
    if t1 < t0 or t0 < 0:
        raise FormatError("t1 precedes t0", offset)
    return Activity(aid, comp, ucaid, t0, t1, tuple(attrs), parents, err)


def read_trace(path) -> Trace:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IOTraceError(f"cannot read trace {path}: {exc}") from exc
    return parse_trace(data)


def parse_trace(data: bytes) -> Trace:
    if not data:
        raise FormatError("empty file, header missing", 0)
    lines = data.split(b"\n")
    if lines[-1] != b"":
        raise FormatError("truncated final record", len(data) - len(lines[-1]))
    lines.pop()
    offset = 0
    hdr = _decode_line(lines[0], 0)
    if hdr.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported version {hdr.get('version')!r}", 0)
    reg = _registry_from_header(hdr, 0)
    epoch = _int(hdr.get("epoch_ns"), "epoch_ns", 0)
    count = _int(hdr.get("count"), "count", 0)
    partial = hdr.get("partial", False)
    if not isinstance(partial, bool):
        raise FormatError("partial flag must be a boolean", 0)
    offset += len(lines[0]) + 1

    activities: list[Activity] = []
    seen: set[Aid] = set()
    prev_key = None
    for line in lines[1:]:
        a = _decode_activity(_decode_line(line, offset), reg, offset)
        key = a.sort_key()
        if prev_key is not None and key <= prev_key:
            raise FormatError("records out of (t_start, aid) order", offset)
        if a.aid in seen:
            raise FormatError(f"duplicate activity id {a.aid}", offset)
        for p in a.parents:
            # a window may cut off parents, but never one that would follow its child
            outside = partial and (p.pid != a.aid.pid or p.seq < a.aid.seq)
            if p not in seen and not outside:
                raise FormatError(f"parent {p} not found earlier in trace", offset)
        seen.add(a.aid)
        prev_key = key
        activities.append(a)
        offset += len(line) + 1
    if len(activities) != count:
        raise FormatError(f"header announces {count} records, found {len(activities)}", offset)
    return Trace(reg, activities, epoch, partial)
