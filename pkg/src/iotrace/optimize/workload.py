"""Synthetic access traces for the four levels of MPI-IO access and strided reads."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

KiB = 1024

PATTERNS = ("ind-ctg", "ind-nc", "coll-ctg", "coll-nc")


class IOAccess(NamedTuple):
    offset: int
    length: int
    direction: str = "read"
    barrier: int | None = None

    @property
    def end(self) -> int:
        return self.offset + self.length


@dataclass(frozen=True)
class WorkloadSpec:
    pattern: str = "ind-ctg"
    processes: int = 1
    blocks: int = 1
    block_size: int = 100 * KiB
    sieve_size: int | None = None
    direction: str = "read"

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}; expected one of {PATTERNS}")
        if min(self.processes, self.blocks, self.block_size) < 1:
            raise ValueError("processes, blocks and block size must all be >= 1")
        if self.direction not in ("read", "write"):
            raise ValueError(f"direction must be read or write, not {self.direction!r}")

    @property
    def collective(self) -> bool:
        return self.pattern.startswith("coll")

    @property
    def contiguous(self) -> bool:
        return self.pattern.endswith("ctg")

    @property
    def total_bytes(self) -> int:
        return self.processes * self.blocks * self.block_size


def gen_workload(spec: WorkloadSpec) -> dict[int, list[IOAccess]]:
    """Per-process access sequences over one shared file.

    Contiguous: process ``p`` owns blocks ``p*N .. p*N+N-1``.
    Non-contiguous: block ``i`` of process ``p`` sits at ``(i*P + p) * B``.
    Collective patterns tag access ``i`` with barrier round ``i``.
    """
    P, N, B = spec.processes, spec.blocks, spec.block_size
    traces = {}
    for p in range(P):
        accesses = []
        for i in range(N):
            block = p * N + i if spec.contiguous else i * P + p
            accesses.append(IOAccess(block * B, B, spec.direction, i if spec.collective else None))
        traces[p] = accesses
    return traces


def gen_strided(stride: int, access_size: int = KiB, count: int | None = None,
                total_bytes: int | None = None, start: int = 0) -> list[IOAccess]:
    """Read ``access_size`` bytes every ``stride`` bytes.

    Exactly one of *count* or *total_bytes* (the stream length covered) is needed.
    """
    if stride < access_size:
        raise ValueError("stride must cover at least one access")
    if count is None:
        if total_bytes is None:
            raise ValueError("give count or total_bytes")
        count = total_bytes // stride
    return [IOAccess(start + i * stride, access_size) for i in range(count)]
