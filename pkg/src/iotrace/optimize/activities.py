"""Turn simulated access traces into POSIX activities for the analysis plugins."""

from __future__ import annotations

from typing import Mapping

from ..model import Activity, ActivityBuilder, Registry, register_posix
from .storage import StorageModel, default_model, simulate
from .workload import IOAccess

OPEN_NS = 20_000
CLOSE_NS = 10_000


def workload_activities(traces: Mapping[int, list[IOAccess]], registry: Registry,
                        filename: str = "/shared/file.dat", model: StorageModel | None = None,
                        handle: int = 3) -> list[Activity]:
    """open / data accesses / close per process, timed by the storage model.

    Every process starts at t=0; each data access starts when the previous
    one ends.  Data activities carry the handle, position and byte count and
    name the open as their parent.
    """
    model = model or default_model()
    comp, attrs = register_posix(registry)
    builder = ActivityBuilder(registry)
    ucaid = {op: comp.ucaid(op) for op in comp.ops}
    out = []
    for pid, accesses in sorted(traces.items()):
        times = simulate(accesses, model).times
        t = 0
        opened = builder.build(comp.id, ucaid["open"], t, t + OPEN_NS,
                               [(attrs["filename"], filename), (attrs["filehandle"], handle)], pid=pid)
        out.append(opened)
        t += OPEN_NS
        for acc, dt in zip(accesses, times):
            dt = max(1, round(dt))
            if acc.direction == "read":
                amount = [(attrs["bytes_to_read"], acc.length), (attrs["bytes_read"], acc.length)]
            else:
                amount = [(attrs["bytes_to_write"], acc.length), (attrs["bytes_written"], acc.length)]
            out.append(builder.build(
                comp.id, ucaid[acc.direction], t, t + dt,
                [(attrs["filehandle"], handle), *amount, (attrs["position"], acc.offset)],
                parents=[opened], pid=pid,
            ))
            t += dt
        out.append(builder.build(comp.id, ucaid["close"], t, t + CLOSE_NS,
                                 [(attrs["filehandle"], handle)], parents=[opened], pid=pid))
    return out
