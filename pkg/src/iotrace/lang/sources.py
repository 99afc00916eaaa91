"""Lazy field-per-record access to raw trace files.

Opening a source only records where each record starts; a field is
converted the first time somebody asks for it.  ``RecordCursor.parse_count``
counts those conversions so callers can check laziness.
"""

from __future__ import annotations

import csv
import json
import re
from array import array
from dataclasses import dataclass

from ..errors import IndexOutOfRange, IOTraceError, MalformedRecord
from .sexpr import MISSING

KINDS = ("csv", "json-lines", "strace-text")
_KIND_ALIASES = {"jsonl": "json-lines", "json": "json-lines", "strace": "strace-text"}


@dataclass(frozen=True)
class SourceFormat:
    kind: str
    delimiter: str = ","
    header: bool = True
    columns: tuple[str, ...] = ()
    timestamp_unit: str = "s"

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if kind == "csv":
            if len(self.delimiter) != 1:
                raise ValueError("csv delimiter must be a single character")
            if not self.header and not self.columns:
                raise ValueError("csv without a header row needs explicit column names")
        if self.timestamp_unit not in ("s", "ms", "us", "ns"):
            raise ValueError(f"unknown timestamp unit {self.timestamp_unit!r}")


_STRACE_LINE = re.compile(
    r"""\s*(?:(?P<pid>\d+)\s+)?(?P<ts>\d+(?:\.\d+)?)\s+(?P<syscall>[A-Za-z_]\w*)
        \((?P<args>.*)\)\s*=\s*(?P<ret>-?\d+)(?P<rest>.*?)\s*\Z""",
    re.VERBOSE,
)
_ERRNO = re.compile(r"\s*(E[A-Z0-9]+)\b")
_STRACE_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\", "0": "\0"}


def split_strace_args(text: str) -> list[str]:
    """Split an strace argument list on top-level commas, decoding quoted strings."""
    args, buf = [], []
    depth = 0
    i = 0
    quoted = False
    while i < len(text):
        c = text[i]
        if c == '"':
            if depth == 0 and not "".join(buf).strip():
                buf = []
            j = i + 1
            out = []
            while j < len(text) and text[j] != '"':
                if text[j] == "\\" and j + 1 < len(text):
                    nxt = text[j + 1]
                    if nxt == "x" and j + 3 < len(text):
                        out.append(chr(int(text[j + 2 : j + 4], 16)))
                        j += 4
                        continue
                    out.append(_STRACE_ESCAPES.get(nxt, nxt))
                    j += 2
                    continue
                out.append(text[j])
                j += 1
            if j >= len(text):
                raise ValueError("unterminated string argument")
            buf.append("".join(out))
            quoted = True
            i = j + 1
            # strace marks truncated strings with a trailing "..."
            if text.startswith("...", i):
                i += 3
            continue
        if c in "[{(":
            depth += 1
        elif c in "]})":
            depth -= 1
        if c == "," and depth == 0:
            args.append("".join(buf) if quoted else "".join(buf).strip())
            buf, quoted = [], False
            i += 1
            continue
        if not (quoted and c.isspace()):
            buf.append(c)
        i += 1
    last = "".join(buf) if quoted else "".join(buf).strip()
    if args or last or quoted:
        args.append(last)
    return args


class RecordCursor:
    """Record-boundary index over one source file."""

    def __init__(self, path, fmt: SourceFormat, data: bytes):
        self.path = path
        self.format = fmt
        self._data = data
        self._starts = array("q")
        self._ends = array("q")
        self._lines = array("q")
        self.columns: tuple[str, ...] = fmt.columns
        self.parse_count = 0
        self.position = 0
        self._cache_index = -1
        self._cache_raw = None
        self._cache_fields: dict[str, object] = {}
        self._build_index()

    def _build_index(self):
        data = self._data
        pos, lineno = 0, 0
        header_pending = self.format.kind == "csv" and self.format.header
        while pos < len(data):
            end = data.find(b"\n", pos)
            if end < 0:
                end = len(data)
            lineno += 1
            raw = data[pos:end].rstrip(b"\r")
            if raw.strip():
                if header_pending:
                    self.columns = tuple(self._split_csv(raw.decode("utf-8")))
                    header_pending = False
                else:
                    if self.format.kind == "csv":
                        ncols = len(self._split_csv(raw.decode("utf-8")))
                        if ncols != len(self.columns):
                            raise MalformedRecord(
                                len(self._starts),
                                f"line {lineno}: expected {len(self.columns)} columns, got {ncols}",
                            )
                    self._starts.append(pos)
                    self._ends.append(pos + len(raw))
                    self._lines.append(lineno)
            pos = end + 1

    def _split_csv(self, line: str) -> list[str]:
        return next(csv.reader([line], delimiter=self.format.delimiter))

    def __len__(self):
        return len(self._starts)

    @property
    def count(self) -> int:
        return len(self._starts)

    def line_number(self, index: int) -> int:
        return self._lines[index]

    def raw(self, index: int) -> str:
        self._check(index)
        return self._data[self._starts[index] : self._ends[index]].decode("utf-8")

    def _check(self, index):
        if not 0 <= index < len(self._starts):
            raise IndexOutOfRange(f"record {index} out of range (0..{len(self._starts) - 1})")

    def _record(self, index):
        """Split (not convert) the record; cached for the current record only."""
        if index != self._cache_index:
            text = self.raw(index)
            kind = self.format.kind
            if kind == "csv":
                parsed = self._split_csv(text)
            elif kind == "json-lines":
                try:
                    parsed = json.loads(text)
                except ValueError as exc:
                    raise MalformedRecord(index, f"line {self._lines[index]}: {exc}") from None
                if not isinstance(parsed, dict):
                    raise MalformedRecord(index, f"line {self._lines[index]}: not an object")
            else:
                m = _STRACE_LINE.match(text)
                if m is None:
                    raise MalformedRecord(index, f"line {self._lines[index]}: not a syscall line")
                parsed = {"match": m, "args": None}
            self._cache_index = index
            self._cache_raw = parsed
            self._cache_fields = {}
        return self._cache_raw

    def _convert(self, index, parsed, name):
        kind = self.format.kind
        if kind == "csv":
            try:
                return parsed[self.columns.index(name)]
            except ValueError:
                return MISSING
        if kind == "json-lines":
            value = parsed
            for part in name.split("."):
                if isinstance(value, dict) and part in value:
                    value = value[part]
                elif isinstance(value, list) and part.isdigit() and int(part) < len(value):
                    value = value[int(part)]
                else:
                    return MISSING
            return MISSING if value is None else value
        m = parsed["match"]
        if name in ("pid", "ts", "syscall", "ret"):
            value = m.group(name)
            return MISSING if value is None else value
        if name == "args":
            return m.group("args")
        if name == "errno":
            e = _ERRNO.match(m.group("rest"))
            return e.group(1) if e else MISSING
        if name == "nargs" or (name.startswith("arg") and name[3:].isdigit()):
            if parsed["args"] is None:
                try:
                    parsed["args"] = split_strace_args(m.group("args"))
                except ValueError as exc:
                    raise MalformedRecord(index, f"line {self._lines[index]}: {exc}") from None
            args = parsed["args"]
            if name == "nargs":
                return str(len(args))
            k = int(name[3:])
            return args[k] if k < len(args) else MISSING
        return MISSING

    def get_field(self, index: int, name: str):
        self._check(index)
        parsed = self._record(index)
        self.position = index
        if name in self._cache_fields:
            return self._cache_fields[name]
        value = self._convert(index, parsed, name)
        self.parse_count += 1
        self._cache_fields[name] = value
        return value


def open_source(path, fmt: SourceFormat) -> RecordCursor:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IOTraceError(f"cannot open source {path}: {exc}") from exc
    return RecordCursor(path, fmt, data)


def get_field(cursor: RecordCursor, record_index: int, field: str):
    return cursor.get_field(record_index, field)
