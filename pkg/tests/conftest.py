import pytest

from iotrace.model import ActivityBuilder, Registry, register_posix


class Posix:
    """A registry with the POSIX component plus a builder and short helpers."""

    def __init__(self):
        self.registry = Registry()
        self.comp, self.attrs = register_posix(self.registry)
        self.builder = ActivityBuilder(self.registry)

    def op(self, name, t0, t1=None, pid=0, parents=(), error=0, **attrs):
        return self.builder.build(
            self.comp.id,
            self.comp.ucaid(name),
            t0,
            t0 if t1 is None else t1,
            [(self.attrs[k], v) for k, v in attrs.items()],
            parents,
            error,
            pid,
        )


@pytest.fixture
def posix():
    return Posix()


# acceptance verdicts, repeated in the terminal summary
VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    def record(criterion, ok, detail=""):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
