"""Translate source records into unified activities with an s-expression program."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from ..errors import EvalError, IOTraceError, MalformedRecord, UnresolvedParent
from ..model import Activity, ActivityBuilder, Aid, Registry
from .sexpr import MISSING, EvalContext, EvalFailure, Expr, SexprProgram, run_program, to_float, to_int
from .sources import RecordCursor


@dataclass
class TargetMapping:
    """Binds program output fields to the unified activity model.

    ``attrs`` maps an output field name to ``(domain, name, datatype)``.
    Either ``op_field`` (operation name) or ``ucaid_field`` selects the
    activity type; ``ops`` lists the component's operations in ucaid order.
    """

    component: str
    ops: tuple[str, ...]
    attrs: dict[str, tuple[str, str, str]] = field(default_factory=dict)
    op_field: str | None = "op"
    ucaid_field: str | None = None
    t0_field: str = "t0"
    t1_field: str = "t1"
    err_field: str = "err"
    pid_field: str = "pid"
    parent_field: str = "parent"
    default_pid: int = 0


@dataclass(frozen=True)
class Reject:
    record_index: int
    line: int | None
    reason: str

    def __str__(self):
        return f"record {self.record_index} (line {self.line}): {self.reason}"


def _parent_names(expr, out: set):
    if isinstance(expr, Expr):
        if expr.op == "parent-of":
            out.add(expr.args[0])
        for a in expr.args:
            _parent_names(a, out)


def _integral(value, what):
    if isinstance(value, float):
        return round(value)  # half-even
    if isinstance(value, str):
        v = to_float(value) if any(c in value for c in ".eE") else to_int(value)
        return _integral(v, what)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{what} must be numeric, got {value!r}")
    return value


def _coerce(value, datatype):
    if datatype == "string":
        return value if isinstance(value, str) else (repr(value) if isinstance(value, float) else str(value))
    if datatype == "float64":
        return to_float(value)
    return _integral(value, datatype)


class Translator:
    def __init__(self, program: SexprProgram, mapping: TargetMapping, registry: Registry,
                 builder: ActivityBuilder | None = None):
        self.program = program
        self.mapping = mapping
        self.registry = registry
        self.builder = builder or ActivityBuilder(registry)
        self.component = registry.register_component(mapping.component, mapping.ops)
        self.attr_ids = {
            out: registry.register_attribute(domain, name, datatype)
            for out, (domain, name, datatype) in mapping.attrs.items()
        }
        self.attr_types = {out: spec[2] for out, spec in mapping.attrs.items()}
        self.anchor_fields: set[str] = set()
        for f in program.fields:
            _parent_names(f.expr, self.anchor_fields)
        self._anchors: dict[tuple[int, str, object], Aid] = {}

    def _pid(self, outputs) -> int:
        value = outputs.get(self.mapping.pid_field, MISSING)
        return self.mapping.default_pid if value is MISSING else _integral(value, "pid")

    def _make_parent_lookup(self, ctx: EvalContext):
        def lookup(name, value, pos):
            if value is MISSING:
                raise EvalFailure(f"parent-of {name!r}: field is missing", pos)
            aid = self._anchors.get((self._pid(ctx.outputs), name, value))
            if aid is None:
                raise _Unresolved(pos)
            return aid

        return lookup

    def translate_record(self, cursor: RecordCursor, index: int) -> Activity:
        m = self.mapping
        line = cursor.line_number(index)

        def getter(name):
            return cursor.get_field(index, name)

        ctx = EvalContext(getter, None)
        ctx._parent_of = self._make_parent_lookup(ctx)
        try:
            out = run_program(self.program, ctx)
        except _Unresolved as exc:
            raise UnresolvedParent(index, exc.pos, line) from None
        except EvalFailure as exc:
            raise EvalError(index, exc.pos, str(exc), line) from None
        except MalformedRecord as exc:
            raise EvalError(index, None, str(exc), line) from None

        try:
            if m.ucaid_field is not None and out.get(m.ucaid_field, MISSING) is not MISSING:
                ucaid = _integral(out[m.ucaid_field], "ucaid")
            else:
                op = out.get(m.op_field, MISSING) if m.op_field else MISSING
                if op is MISSING:
                    raise ValueError(f"required field {m.op_field!r} is missing")
                ucaid = self.component.ucaid(str(op))
            t0 = out.get(m.t0_field, MISSING)
            if t0 is MISSING:
                raise ValueError(f"required field {m.t0_field!r} is missing")
            t0 = _integral(t0, "t0")
            t1 = out.get(m.t1_field, MISSING)
            t1 = t0 if t1 is MISSING else _integral(t1, "t1")
            err = out.get(m.err_field, MISSING)
            err = 0 if err is MISSING else _integral(err, "err")
            attrs = []
            for name, attr_id in self.attr_ids.items():
                value = out.get(name, MISSING)
                if value is not MISSING:
                    attrs.append((attr_id, _coerce(value, self.attr_types[name])))
            parent = out.get(m.parent_field, MISSING)
            parents = () if parent is MISSING else (Aid(*parent),)
            pid = self._pid(out)
            activity = self.builder.build(
                self.component.id, ucaid, t0, t1, attrs, parents, err, pid
            )
        except (ValueError, TypeError, OverflowError, IOTraceError) as exc:
            raise EvalError(index, None, str(exc), line) from None

        if not activity.parents:
            for name in self.anchor_fields:
                value = out.get(name, MISSING)
                if value is not MISSING:
                    self._anchors[(activity.aid.pid, name, value)] = activity.aid
        return activity

    def run(self, cursor: RecordCursor, rejects: list | None = None) -> Iterator[Activity]:
        for index in range(len(cursor)):
            try:
                yield self.translate_record(cursor, index)
            except EvalError as exc:
                if rejects is None:
                    raise
                rejects.append(Reject(index, exc.line, exc.cause))


class _Unresolved(Exception):
    def __init__(self, pos):
        self.pos = pos


def translate(cursor: RecordCursor, program: SexprProgram, mapping: TargetMapping,
              registry: Registry | None = None, rejects: list | None = None,
              builder: ActivityBuilder | None = None) -> Iterator[Activity]:
    """Yield one activity per source record, in source order.

    Records that fail are appended to *rejects* when it is given; otherwise
    the first failure raises :class:`EvalError`.
    """
    registry = registry if registry is not None else Registry()
    return Translator(program, mapping, registry, builder).run(cursor, rejects)
