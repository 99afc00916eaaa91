"""Exception hierarchy shared by all iotrace modules."""


class IOTraceError(Exception):
    pass


# core model


class DatatypeConflict(IOTraceError):
    pass


class NameCollision(IOTraceError):
    pass


class UnknownId(IOTraceError):
    pass


class TimeOrder(IOTraceError):
    pass


class BadParent(IOTraceError):
    pass


class FormatError(IOTraceError):
    """Corrupt or truncated trace file; ``offset`` is the byte offset of the bad record."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


# translation language


class ProgramError(IOTraceError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} at line {line}, column {col}"
        super().__init__(message)


class UnbalancedParens(ProgramError):
    pass


class UnknownPrimitive(ProgramError):
    def __init__(self, name, line=None, col=None):
        self.name = name
        super().__init__(f"unknown primitive {name!r}", line, col)


class DuplicateField(ProgramError):
    def __init__(self, name, line=None, col=None):
        self.name = name
        super().__init__(f"duplicate field {name!r}", line, col)


class NonRecordRoot(ProgramError):
    pass


class MalformedRecord(IOTraceError):
    def __init__(self, index, reason=""):
        self.index = index
        super().__init__(f"malformed record {index}" + (f": {reason}" if reason else ""))


class IndexOutOfRange(IOTraceError):
    pass


class EvalError(IOTraceError):
    def __init__(self, record_index, position, cause, line=None):
        self.record_index = record_index
        self.position = position
        self.cause = cause
        self.line = line
        where = f"record {record_index}"
        if line is not None:
            where += f" (line {line})"
        if position is not None:
            where += f", expression at {position[0]}:{position[1]}"
        super().__init__(f"{where}: {cause}")


class UnresolvedParent(EvalError):
    def __init__(self, record_index, position=None, line=None):
        super().__init__(record_index, position, "no matching parent activity", line)


# pipeline


class UnknownPlugin(IOTraceError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown plugin {name!r}")


class BadOption(IOTraceError):
    def __init__(self, plugin, key, reason="unknown option"):
        self.plugin = plugin
        self.key = key
        super().__init__(f"{plugin}: {reason} {key!r}")


class ConfigError(IOTraceError):
    pass


# statistics


class TimeRegression(IOTraceError):
    pass


class BadLevel(IOTraceError):
    pass


class BadCapacity(IOTraceError):
    pass


# analysis


class InsufficientSamples(IOTraceError):
    pass


class RuleSyntaxError(IOTraceError):
    pass


# optimize


class BadDuration(IOTraceError):
    pass


class BufferTooSmall(IOTraceError):
    pass


class ModelError(IOTraceError):
    pass


# reporting


class TypeMismatch(IOTraceError):
    pass
