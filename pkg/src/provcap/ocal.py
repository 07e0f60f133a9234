"""Memory/disk footprint accounting for provenance capsules.

Sums the lengths of disjoint block extents on the memory and disk sides,
compares the two totals to flag compressed loading, and reports capsule
storage overhead relative to the original file size.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from provcap.model import ProvenanceCapsule
from provcap.store import serialize_capsule


class BlockKind(str, Enum):
    MEMORY = "MEMORY"
    DISK = "DISK"


class InvalidBlockListError(ValueError):
    """Extents overlap or have nonpositive length."""


@dataclass(frozen=True)
class BlockList:
    kind: BlockKind
    extents: tuple[tuple[int, int], ...]  # (offset, length in bytes)

    def __post_init__(self):
        validate_extents(self.extents)


def validate_extents(extents) -> None:
    # offsets are abstract block indices: two extents overlap when they claim
    # the same index, irrespective of their byte lengths
    seen = set()
    for offset, length in extents:
        if length <= 0:
            raise InvalidBlockListError(f"extent length must be positive, got {length}")
        if offset in seen:
            raise InvalidBlockListError(f"extents overlap at offset {offset}")
        seen.add(offset)


@dataclass(frozen=True)
class MemDiskFootprint:
    m_sum: int
    sb_sum: int
    compressed: bool
    delta_f: int


def sum_blocks(blocks: BlockList) -> int:
    """Total bytes across all disjoint extents."""
    validate_extents(blocks.extents)
    return sum(length for _, length in blocks.extents)


def footprint(
    mem: BlockList,
    disk: BlockList,
    compressed_when: Callable[[int, int], bool] = operator.lt,
) -> MemDiskFootprint:
    """Memory and disk consumption plus the compressed-load flag.

    By default the file counts as loaded compressed when the memory total is
    smaller than the disk total; the comparator is swappable for
    experimentation.
    """
    if mem.kind is not BlockKind.MEMORY:
        raise ValueError(f"expected a MEMORY block list, got {mem.kind.value}")
    if disk.kind is not BlockKind.DISK:
        raise ValueError(f"expected a DISK block list, got {disk.kind.value}")
    m_sum = sum_blocks(mem)
    sb_sum = sum_blocks(disk)
    compressed = bool(compressed_when(m_sum, sb_sum))
    delta_f = max(0, sb_sum - m_sum) if compressed else 0
    return MemDiskFootprint(m_sum=m_sum, sb_sum=sb_sum, compressed=compressed, delta_f=delta_f)


def capsule_overhead(capsule: ProvenanceCapsule, fp: MemDiskFootprint) -> float:
    """(serialized capsule bytes + disk blocks) / original file length."""
    if not capsule.bound:
        raise ValueError(f"capsule b_id={capsule.b_id} is not bound")
    if capsule.original_length <= 0:
        raise ValueError("bound capsule must carry a positive original_length")
    size = len(serialize_capsule(capsule).encode("utf-8"))
    return (size + fp.sb_sum) / capsule.original_length
