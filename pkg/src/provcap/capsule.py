"""Capsule engine: register file objects, accumulate provenance, bind capsules.

Every original file gets a fresh binding id at registration together with an
empty capsule.  Activity events are matched to files by (vm_id, path) and
appended as provenance records.  Binding ("encapsulation") happens once per
file: it stamps the storage-block location, the executing entity and the
original file length onto the capsule and reports the clock time the binding
step took.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from provcap.model import (
    ActivityEvent,
    BidRegistry,
    OpKind,
    OriginalFile,
    ProvenanceCapsule,
    ProvenanceRecord,
)


class UnknownObjectError(KeyError):
    """Event or binding id does not resolve to a registered file."""


class DuplicateRegistrationError(ValueError):
    """The same (vm_id, path) was registered twice."""


class AlreadyBoundError(RuntimeError):
    """Second encapsulation of the same binding id."""


class EncapsulationFailedError(RuntimeError):
    def __init__(self, b_id: int, attempts: int):
        super().__init__(f"encapsulation of b_id={b_id} failed after {attempts} attempts")
        self.b_id = b_id
        self.attempts = attempts


class WallClock:
    def now(self) -> float:
        return time.perf_counter()

    def advance(self, seconds: float) -> None:  # real time cannot be advanced
        pass


class VirtualClock:
    """Deterministic clock for simulation; advances only when told to."""

    def __init__(self, start: float = 0.0):
        self._t = float(start)

    def now(self) -> float:
        return self._t

    def advance(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("cannot advance a clock backwards")
        self._t += seconds


@dataclass
class RetryPolicy:
    max_retries: int = 3
    failure_probability: float = 0.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not 0.0 <= self.failure_probability <= 1.0:
            raise ValueError("failure_probability must be in [0, 1]")


@dataclass
class EngineState:
    data_files: list[OriginalFile] = field(default_factory=list)
    prov_files: dict[int, ProvenanceCapsule] = field(default_factory=dict)
    locations: dict[int, str] = field(default_factory=dict)
    bid_registry: BidRegistry = field(default_factory=BidRegistry)
    path_index: dict[tuple[str, str], int] = field(default_factory=dict)
    lock: threading.RLock = field(default_factory=threading.RLock)


def register_file(state: EngineState, path: str, size_mb: float, vm_id: str) -> int:
    """Register an original file; returns its freshly allocated binding id."""
    if not path:
        raise ValueError("path must be nonempty")
    key = (vm_id, path)
    with state.lock:
        if key in state.path_index:
            raise DuplicateRegistrationError(f"{vm_id}:{path} already registered")
        b_id = state.bid_registry.allocate()
        state.data_files.append(OriginalFile(b_id=b_id, path=path, size_mb=size_mb, vm_id=vm_id))
        state.prov_files[b_id] = ProvenanceCapsule(b_id=b_id)
        state.path_index[key] = b_id
    return b_id


def record_provenance(state: EngineState, event: ActivityEvent) -> ProvenanceCapsule:
    """Append the event as a provenance record to the matching capsule."""
    key = (event.vm_id, event.subject_path)
    with state.lock:
        b_id = state.path_index.get(key)
        if b_id is None:
            raise UnknownObjectError(f"no registered file for {event.vm_id}:{event.subject_path}")
        capsule = state.prov_files[b_id]
        sender = receiver = None
        if event.op_kind in (OpKind.SEND, OpKind.RECEIVE):
            sender = event.vm_id if event.op_kind is OpKind.SEND else event.object_path
            receiver = event.object_path if event.op_kind is OpKind.SEND else event.vm_id
        capsule.records.append(
            ProvenanceRecord(
                timestamp_ms=event.timestamp_ms,
                operator=event.operator,
                operation=event.op_kind,
                location=event.subject_path,
                executing_entity=event.process_id,
                sender=sender,
                receiver=receiver,
            )
        )
    return capsule


def _file_for(state: EngineState, b_id: int) -> OriginalFile:
    for f in state.data_files:
        if f.b_id == b_id:
            return f
    raise UnknownObjectError(f"unknown b_id {b_id}")


def encapsulate(
    state: EngineState,
    b_id: int,
    clock=None,
    cost_s: Optional[float] = None,
) -> tuple[ProvenanceCapsule, float]:
    """Bind the capsule to its file; returns (capsule, binding delay in seconds).

    The delay is clock time spent in the binding step alone.  Simulations pass
    a VirtualClock plus the virtual cost of the step; with a real clock the
    measured wall time is reported.
    """
    clock = clock or WallClock()
    with state.lock:
        capsule = state.prov_files.get(b_id)
        if capsule is None:
            raise UnknownObjectError(f"unknown b_id {b_id}")
        if capsule.bound:
            raise AlreadyBoundError(f"b_id {b_id} already encapsulated")
        original = _file_for(state, b_id)
        t0 = clock.now()
        if cost_s is not None:
            clock.advance(cost_s)
        location = f"sb-{b_id}"
        state.locations[b_id] = location
        capsule.location = location
        capsule.bound_by = "controller"
        capsule.original_length = original.length_bytes
        capsule.bound = True
        delay = clock.now() - t0
    return capsule, delay


def replay_trace(events, auto_register: bool = True) -> EngineState:
    """Rebuild an engine from a stored trace.

    A CREATE on a not-yet-registered (vm_id, path) registers the file first,
    sizing it from the event's byte count (1 MB when the count is zero).
    Every event, the CREATE included, is then recorded as provenance, so a
    replayed engine matches the live one record for record.
    """
    state = EngineState()
    for event in events:
        key = (event.vm_id, event.subject_path)
        if (
            auto_register
            and event.op_kind is OpKind.CREATE
            and key not in state.path_index
        ):
            size_mb = event.byte_count / 2**20 if event.byte_count else 1.0
            register_file(state, event.subject_path, size_mb, event.vm_id)
        record_provenance(state, event)
    return state


def encapsulate_all(state: EngineState) -> list[ProvenanceCapsule]:
    """Bind every still-unbound capsule, in binding-id order, at zero virtual cost."""
    clock = VirtualClock()
    out = []
    for b_id in sorted(state.prov_files):
        if not state.prov_files[b_id].bound:
            capsule, _ = encapsulate(state, b_id, clock=clock, cost_s=0.0)
            out.append(capsule)
    return out


def encapsulate_with_retry(
    state: EngineState,
    b_id: int,
    policy: RetryPolicy,
    rng: random.Random,
    cost_sampler: Optional[Callable[[], float]] = None,
    clock=None,
) -> tuple[ProvenanceCapsule, float, int]:
    """Encapsulate with simulated transient faults.

    Each attempt fails with policy.failure_probability; failed attempts still
    cost clock time.  Returns (capsule, total delay over all attempts, number
    of failed attempts).  Raises EncapsulationFailedError once max_retries
    retries are exhausted.
    """
    clock = clock or WallClock()
    total = 0.0
    attempts = 0
    while True:
        attempts += 1
        failed = rng.random() < policy.failure_probability
        if failed:
            cost = cost_sampler() if cost_sampler is not None else 0.0
            clock.advance(cost)
            total += cost
            if attempts > policy.max_retries:
                raise EncapsulationFailedError(b_id, attempts)
            continue
        cost = cost_sampler() if cost_sampler is not None else None
        capsule, delay = encapsulate(state, b_id, clock=clock, cost_s=cost)
        total += delay
        return capsule, total, attempts - 1
