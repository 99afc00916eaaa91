"""Bundled adapter for the strace-like ``<seconds> name(args) = ret`` subset."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Iterator

from ..model import POSIX_ATTRIBUTES, POSIX_OPS, Activity, Registry
from .sexpr import SexprProgram, parse_program
from .sources import SourceFormat, open_source
from .translate import TargetMapping, translate

STRACE_FORMAT = SourceFormat("strace-text")


def strace_program_text() -> str:
    return resources.files("iotrace.data").joinpath("strace.sexp").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def strace_program() -> SexprProgram:
    return parse_program(strace_program_text())


def posix_mapping() -> TargetMapping:
    attrs = {key: spec for key, spec in POSIX_ATTRIBUTES.items()}
    attrs["fd"] = attrs.pop("filehandle")
    return TargetMapping(component="POSIX", ops=POSIX_OPS, attrs=attrs)


def ingest_strace(path, registry: Registry | None = None, rejects: list | None = None) -> Iterator[Activity]:
    cursor = open_source(path, STRACE_FORMAT)
    return translate(cursor, strace_program(), posix_mapping(), registry, rejects)
