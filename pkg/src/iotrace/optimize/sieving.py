"""Data sieving: serving non-contiguous writes with read-modify-write cycles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..errors import BufferTooSmall
from .workload import IOAccess


@dataclass(frozen=True)
class SieveCycle:
    """Lock ``[offset, offset + length)``, read it, merge ``blocks``, write it back."""

    offset: int
    length: int
    blocks: tuple[IOAccess, ...]

    @property
    def end(self) -> int:
        return self.offset + self.length

    @property
    def bytes_read(self) -> int:
        return self.length

    @property
    def bytes_written(self) -> int:
        return self.length


def apply_data_sieving(writes: Iterable[IOAccess], sieve_size: int) -> list[SieveCycle]:
    """Split the extent covered by one process' writes into sieve-buffer regions.

    Regions are consecutive and ``sieve_size`` long starting at the first
    written byte; the last one is cut at the end of the extent.  A block that
    would straddle a region boundary ends the region early so each block
    lands in exactly one cycle.  Regions holding none of the blocks are skipped.
    """
    blocks = sorted(writes, key=lambda b: b.offset)
    if not blocks:
        return []
    largest = max(b.length for b in blocks)
    if sieve_size < largest:
        raise BufferTooSmall(f"sieve buffer {sieve_size} smaller than block size {largest}")
    extent_end = max(b.end for b in blocks)
    cycles = []
    pos = blocks[0].offset
    i = 0
    while i < len(blocks):
        region_end = min(pos + sieve_size, extent_end)
        members = []
        while i < len(blocks) and blocks[i].offset < region_end:
            b = blocks[i]
            if b.end > region_end:
                if members:
                    region_end = b.offset
                else:
                    # a block ahead of pos; restart the region at it
                    pos = b.offset
                    region_end = min(pos + sieve_size, extent_end)
                    continue
                break
            members.append(b)
            i += 1
        if members:
            cycles.append(SieveCycle(pos, region_end - pos, tuple(members)))
        pos = region_end
    return cycles
