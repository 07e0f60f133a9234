"""Core domain types: activity events, file objects, capsules and binding ids.

A binding id (bid) is the shared identity that ties an original file object
to its provenance capsule.  Bid 0 is the reserved "unassigned" sentinel and
is never handed out.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional


class OpKind(str, Enum):
    CREATE = "CREATE"
    RENAME = "RENAME"
    COPY = "COPY"
    READ = "READ"
    WRITE = "WRITE"
    DELETE = "DELETE"
    SEND = "SEND"
    RECEIVE = "RECEIVE"


#: Operations that act on a second path (rename target, copy destination,
#: transfer peer).  object_path is mandatory for these and forbidden otherwise.
PAIRED_OPS = frozenset({OpKind.RENAME, OpKind.COPY, OpKind.SEND, OpKind.RECEIVE})


class IdentityExhaustedError(RuntimeError):
    """The binding-id space is exhausted; ids must never wrap or repeat."""


class BidRegistry:
    """Allocator of unique, strictly increasing binding ids (1, 2, 3, ...).

    Allocation is atomic and safe for concurrent callers.
    """

    MAX_BID = 2**63 - 1

    def __init__(self, last: int = 0):
        if last < 0:
            raise ValueError("last-assigned bid cannot be negative")
        self._last = last
        self._lock = threading.Lock()

    @property
    def last(self) -> int:
        return self._last

    def allocate(self) -> int:
        with self._lock:
            if self._last >= self.MAX_BID:
                raise IdentityExhaustedError("binding-id space exhausted")
            self._last += 1
            return self._last


@dataclass(frozen=True)
class ActivityEvent:
    """One atomic activity-layer action: who did what, when, where, how much."""

    event_id: int
    timestamp_ms: float
    vm_id: str
    process_id: str
    operator: str
    op_kind: OpKind
    subject_path: str
    object_path: Optional[str] = None
    byte_count: int = 0

    def __post_init__(self):
        if self.event_id <= 0:
            raise ValueError(f"event_id must be positive, got {self.event_id}")
        object.__setattr__(self, "timestamp_ms", float(self.timestamp_ms))
        if self.timestamp_ms < 0:
            raise ValueError("timestamp_ms must be nonnegative")
        if self.byte_count < 0:
            raise ValueError("byte_count must be nonnegative")
        if not self.subject_path:
            raise ValueError("subject_path must be nonempty")
        if self.op_kind in PAIRED_OPS:
            if self.object_path is None:
                raise ValueError(f"{self.op_kind.value} requires an object_path")
        elif self.object_path is not None:
            raise ValueError(f"{self.op_kind.value} must not carry an object_path")


def check_trace(events: Iterable[ActivityEvent]) -> None:
    """Raise ValueError unless event_ids are strictly increasing."""
    prev = 0
    for ev in events:
        if ev.event_id <= prev:
            raise ValueError(
                f"event_id {ev.event_id} does not increase past {prev}"
            )
        prev = ev.event_id


@dataclass(frozen=True)
class OriginalFile:
    """A registered file object, identified by its binding id."""

    b_id: int
    path: str
    size_mb: float
    vm_id: str

    def __post_init__(self):
        if self.b_id <= 0:
            raise ValueError("b_id must be a positive assigned identity")
        if self.size_mb <= 0:
            raise ValueError("size_mb must be positive")

    @property
    def length_bytes(self) -> int:
        return int(self.size_mb * 2**20)


@dataclass(frozen=True)
class ProvenanceRecord:
    """One provenance fact: an operation observed on the bound file."""

    timestamp_ms: float
    operator: str
    operation: OpKind
    location: str
    executing_entity: str
    sender: Optional[str] = None
    receiver: Optional[str] = None


@dataclass
class ProvenanceCapsule:
    """The provenance metafile bound to one original file.

    Records stay ordered by timestamp (ties broken by arrival).  Binding
    stamps the storage-block location, the executing entity and the original
    file length; a capsule binds exactly once.
    """

    b_id: int
    records: list[ProvenanceRecord] = field(default_factory=list)
    bound: bool = False
    original_length: int = 0
    location: Optional[str] = None
    bound_by: Optional[str] = None
