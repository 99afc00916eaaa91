from .sexpr import MISSING, SexprProgram, parse_program
from .sources import RecordCursor, SourceFormat, get_field, open_source
from .strace import ingest_strace, posix_mapping, strace_program
from .translate import Reject, TargetMapping, Translator, translate

__all__ = [
    "MISSING",
    "RecordCursor",
    "Reject",
    "SexprProgram",
    "SourceFormat",
    "TargetMapping",
    "Translator",
    "get_field",
    "ingest_strace",
    "open_source",
    "parse_program",
    "posix_mapping",
    "strace_program",
    "translate",
]
