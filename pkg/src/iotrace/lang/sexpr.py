"""S-expression translation programs.

A program is a single ``(record ...)`` form whose children are
``(field NAME EXPR)`` definitions.  Expressions are built from a closed set
of primitives::

    (get NAME) (const V) (to-int E) (to-float E) (scale E FACTOR)
    (concat E...) (if COND THEN ELSE) (eq A B) (parent-of NAME)

String and number literals may appear wherever an expression is expected;
the symbols ``nil``, ``true`` and ``false`` are the only bare identifiers.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from ..errors import (
    DuplicateField,
    NonRecordRoot,
    ProgramError,
    UnbalancedParens,
    UnknownPrimitive,
)


class _Missing:
    __slots__ = ()

    def __repr__(self):
        return "MISSING"

    def __bool__(self):
        return False


MISSING = _Missing()

PRIMITIVES = {
    # name: (min args, max args or None)
    "get": (1, 1),
    "const": (1, 1),
    "to-int": (1, 1),
    "to-float": (1, 1),
    "scale": (2, 2),
    "concat": (1, None),
    "if": (3, 3),
    "eq": (2, 2),
    "parent-of": (1, 1),
}
_SYMBOL_LITERALS = {"nil": MISSING, "true": True, "false": False}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|;[^\n]*)
  | (?P<open>\()
  | (?P<close>\))
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?(?=[\s()]|\Z))
  | (?P<symbol>[^\s()"]+)
    """,
    re.VERBOSE,
)
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass
class Node:
    kind: str  # "list", "string", "number", "symbol"
    value: Any
    line: int
    col: int

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)


def _unescape(raw: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), raw)


def read_sexpr(text: str) -> Node:
    """Read exactly one s-expression from *text*."""
    stack: list[Node] = []
    result: Node | None = None
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ProgramError("unreadable input", line, pos - line_start + 1)
        col = pos - line_start + 1
        kind = m.lastgroup
        tok = m.group(0)
        node = None
        if kind == "ws":
            pass
        elif kind == "open":
            stack.append(Node("list", [], line, col))
        elif kind == "close":
            if not stack:
                raise UnbalancedParens("unexpected ')'", line, col)
            node = stack.pop()
        elif kind == "string":
            node = Node("string", _unescape(tok[1:-1]), line, col)
        elif kind == "number":
            value = float(tok) if any(c in tok for c in ".eE") else int(tok)
            node = Node("number", value, line, col)
        else:
            if tok.startswith('"'):
                raise ProgramError("unterminated string", line, col)
            node = Node("symbol", tok, line, col)
        if node is not None:
            if stack:
                stack[-1].value.append(node)
            elif result is None:
                result = node
            else:
                raise ProgramError("more than one top-level expression", node.line, node.col)
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    if stack:
        open_node = stack[-1]
        raise UnbalancedParens("unclosed '('", open_node.line, open_node.col)
    if result is None:
        raise NonRecordRoot("empty program")
    return result


@dataclass
class Expr:
    op: str
    args: list
    line: int
    col: int

    @property
    def pos(self):
        return (self.line, self.col)


@dataclass
class FieldDef:
    name: str
    expr: Any  # Expr or literal value
    line: int
    col: int


@dataclass
class SexprProgram:
    fields: list[FieldDef]
    source: str = ""
    referenced: set[str] = field(default_factory=set)

    @property
    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]


def _head(node: Node) -> str | None:
    if node.kind == "list" and node.value and node.value[0].kind == "symbol":
        return node.value[0].value
    return None


def _string_arg(node: Node, what: str) -> str:
    if node.kind != "string":
        raise ProgramError(f"{what} expects a string name", node.line, node.col)
    return node.value


def _compile_expr(node: Node, defined: list[str], referenced: set[str]):
    if node.kind in ("string", "number"):
        return node.value
    if node.kind == "symbol":
        if node.value in _SYMBOL_LITERALS:
            return _SYMBOL_LITERALS[node.value]
        raise ProgramError(f"free identifier {node.value!r}", node.line, node.col)
    head = _head(node)
    if head is None:
        raise ProgramError("expression must start with a primitive name", node.line, node.col)
    if head in ("record", "field"):
        raise ProgramError(f"{head!r} is only allowed at the top level", node.line, node.col)
    if head not in PRIMITIVES:
        raise UnknownPrimitive(head, node.line, node.col)
    args = node.value[1:]
    lo, hi = PRIMITIVES[head]
    if len(args) < lo or (hi is not None and len(args) > hi):
        raise ProgramError(f"wrong number of arguments to {head!r}", node.line, node.col)
    if head == "get":
        name = _string_arg(args[0], "get")
        referenced.add(name)
        return Expr(head, [name], node.line, node.col)
    if head == "parent-of":
        name = _string_arg(args[0], "parent-of")
        if name not in defined:
            raise ProgramError(f"parent-of refers to undefined field {name!r}", node.line, node.col)
        return Expr(head, [name], node.line, node.col)
    if head == "const":
        if args[0].kind == "list":
            raise ProgramError("const expects a literal", args[0].line, args[0].col)
        return Expr(head, [_compile_expr(args[0], defined, referenced)], node.line, node.col)
    return Expr(head, [_compile_expr(a, defined, referenced) for a in args], node.line, node.col)


def parse_program(text: str) -> SexprProgram:
    root = read_sexpr(text)
    if _head(root) != "record":
        raise NonRecordRoot("program root must be (record ...)", root.line, root.col)
    fields: list[FieldDef] = []
    defined: list[str] = []
    referenced: set[str] = set()
    for child in root.value[1:]:
        if _head(child) != "field":
            raise ProgramError("record children must be (field NAME EXPR)", child.line, child.col)
        if len(child.value) != 3:
            raise ProgramError("field takes a name and one expression", child.line, child.col)
        name = _string_arg(child.value[1], "field")
        if name in defined:
            raise DuplicateField(name, child.line, child.col)
        expr = _compile_expr(child.value[2], defined, referenced)
        defined.append(name)
        fields.append(FieldDef(name, expr, child.line, child.col))
    return SexprProgram(fields, text, referenced)


# evaluation


class EvalFailure(Exception):
    """Raised inside evaluation; carries the position of the failing expression."""

    def __init__(self, message, pos=None):
        super().__init__(message)
        self.pos = pos


def to_int(value):
    if value is MISSING:
        return MISSING
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot convert {value} to int")
        return math.trunc(value)
    text = str(value).strip()
    try:
        return int(text, 10)
    except ValueError:
        return to_int(float(text))


def to_float(value):
    if value is MISSING:
        return MISSING
    if isinstance(value, str):
        return float(value.strip())
    return float(value)


def _text(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def evaluate(expr, ctx: "EvalContext"):
    if not isinstance(expr, Expr):
        return expr
    op, args = expr.op, expr.args
    try:
        if op == "get":
            return ctx.get(args[0])
        if op == "const":
            return args[0]
        if op == "parent-of":
            return ctx.parent_of(args[0], expr.pos)
        if op == "if":
            cond = evaluate(args[0], ctx)
            return evaluate(args[1] if (cond is not MISSING and cond) else args[2], ctx)
        vals = [evaluate(a, ctx) for a in args]
        if op == "eq":
            a, b = vals
            if isinstance(a, str) != isinstance(b, str):
                return False
            return a == b
        if any(v is MISSING for v in vals):
            return MISSING
        if op == "to-int":
            return to_int(vals[0])
        if op == "to-float":
            return to_float(vals[0])
        if op == "scale":
            return to_float(vals[0]) * to_float(vals[1])
        if op == "concat":
            return "".join(_text(v) for v in vals)
    except EvalFailure:
        raise
    except (ValueError, TypeError, OverflowError) as exc:
        raise EvalFailure(f"{op}: {exc}", expr.pos) from None
    raise EvalFailure(f"unknown primitive {op!r}", expr.pos)


class EvalContext:
    """Evaluation state for one record."""

    def __init__(self, getter: Callable[[str], Any], parent_of: Callable[[str, Any, tuple], Any]):
        self._getter = getter
        self._parent_of = parent_of
        self.outputs: dict[str, Any] = {}

    def get(self, name):
        return self._getter(name)

    def parent_of(self, name, pos):
        return self._parent_of(name, self.outputs.get(name, MISSING), pos)


def run_program(program: SexprProgram, ctx: EvalContext) -> dict[str, Any]:
    for f in program.fields:
        try:
            ctx.outputs[f.name] = evaluate(f.expr, ctx)
        except EvalFailure as exc:
            if exc.pos is None:
                exc.pos = (f.line, f.col)
            raise
    return ctx.outputs
