"""Persistence and interchange: trace files, the append-only capsule log,
and capsule serialization.

Traces and capsule-log entries are line-delimited JSON so runs stay
streamable, diff-able and auditable.  The capsule log is append-only: a
single writer appends, entries are never rewritten, and each export embeds
the bound file's path and length so a capsule stays interpretable on its
own.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable, Optional

from provcap.model import (
    ActivityEvent,
    OpKind,
    OriginalFile,
    ProvenanceCapsule,
    ProvenanceRecord,
)


class ParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class OrderError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_EVENT_REQUIRED = (
    "event_id",
    "timestamp_ms",
    "vm_id",
    "process_id",
    "operator",
    "op_kind",
    "subject_path",
    "byte_count",
)
_EVENT_OPTIONAL = ("object_path",)


def event_to_dict(event: ActivityEvent) -> dict:
    d = {
        "event_id": event.event_id,
        "timestamp_ms": event.timestamp_ms,
        "vm_id": event.vm_id,
        "process_id": event.process_id,
        "operator": event.operator,
        "op_kind": event.op_kind.value,
        "subject_path": event.subject_path,
        "byte_count": event.byte_count,
    }
    if event.object_path is not None:
        d["object_path"] = event.object_path
    return d


def event_from_dict(d: dict, line_no: int = 0) -> ActivityEvent:
    unknown = set(d) - set(_EVENT_REQUIRED) - set(_EVENT_OPTIONAL)
    if unknown:
        raise ParseError(line_no, f"unknown fields: {sorted(unknown)}")
    missing = set(_EVENT_REQUIRED) - set(d)
    if missing:
        raise ParseError(line_no, f"missing fields: {sorted(missing)}")
    try:
        return ActivityEvent(
            event_id=int(d["event_id"]),
            timestamp_ms=float(d["timestamp_ms"]),
            vm_id=str(d["vm_id"]),
            process_id=str(d["process_id"]),
            operator=str(d["operator"]),
            op_kind=OpKind(d["op_kind"]),
            subject_path=str(d["subject_path"]),
            object_path=d.get("object_path"),
            byte_count=int(d["byte_count"]),
        )
    except (ValueError, KeyError) as exc:
        raise ParseError(line_no, str(exc)) from exc


def write_trace(path: str, events: Iterable[ActivityEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(event_to_dict(ev), sort_keys=True))
            fh.write("\n")


def load_trace(path: str) -> list[ActivityEvent]:
    events: list[ActivityEvent] = []
    last_id = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(raw, dict):
                raise ParseError(line_no, "event line must be a JSON object")
            ev = event_from_dict(raw, line_no)
            if ev.event_id <= last_id:
                raise OrderError(
                    line_no, f"event_id {ev.event_id} does not increase past {last_id}"
                )
            last_id = ev.event_id
            events.append(ev)
    return events


def record_to_dict(rec: ProvenanceRecord) -> dict:
    return {
        "timestamp_ms": rec.timestamp_ms,
        "operator": rec.operator,
        "operation": rec.operation.value,
        "location": rec.location,
        "executing_entity": rec.executing_entity,
        "sender": rec.sender,
        "receiver": rec.receiver,
    }


def record_from_dict(d: dict) -> ProvenanceRecord:
    return ProvenanceRecord(
        timestamp_ms=float(d["timestamp_ms"]),
        operator=d["operator"],
        operation=OpKind(d["operation"]),
        location=d["location"],
        executing_entity=d["executing_entity"],
        sender=d.get("sender"),
        receiver=d.get("receiver"),
    )


def capsule_to_dict(capsule: ProvenanceCapsule, original: Optional[OriginalFile] = None) -> dict:
    d = {
        "b_id": capsule.b_id,
        "bound": capsule.bound,
        "original_length": capsule.original_length,
        "location": capsule.location,
        "bound_by": capsule.bound_by,
        "records": [record_to_dict(r) for r in capsule.records],
    }
    if original is not None:
        d["original_path"] = original.path
        d["original_vm"] = original.vm_id
    return d


def capsule_from_dict(d: dict) -> ProvenanceCapsule:
    return ProvenanceCapsule(
        b_id=int(d["b_id"]),
        records=[record_from_dict(r) for r in d["records"]],
        bound=bool(d["bound"]),
        original_length=int(d["original_length"]),
        location=d.get("location"),
        bound_by=d.get("bound_by"),
    )


def serialize_capsule(capsule: ProvenanceCapsule, original: Optional[OriginalFile] = None) -> str:
    return json.dumps(capsule_to_dict(capsule, original), sort_keys=True)


@dataclass(frozen=True)
class CapsuleLogEntry:
    sequence: int
    capsule: ProvenanceCapsule
    written_at_ms: float
    original_path: Optional[str] = None
    original_vm: Optional[str] = None


class CapsuleLog:
    """Append-only log of bound capsules, one JSON entry per line."""

    def __init__(self, path: str):
        self.path = path
        self._next_seq = 1
        self._index: dict[int, CapsuleLogEntry] = {}
        if os.path.exists(path):
            for entry in self._scan():
                self._next_seq = entry.sequence + 1
                self._index[entry.capsule.b_id] = entry
        else:
            open(path, "w", encoding="utf-8").close()

    def _scan(self) -> list[CapsuleLogEntry]:
        entries = []
        with open(self.path, "r", encoding="utf-8") as fh:
            last_seq = 0
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(line_no, f"invalid JSON: {exc}") from exc
                seq = int(raw["sequence"])
                if seq <= last_seq:
                    raise OrderError(line_no, f"sequence {seq} does not increase past {last_seq}")
                last_seq = seq
                entries.append(
                    CapsuleLogEntry(
                        sequence=seq,
                        capsule=capsule_from_dict(raw),
                        written_at_ms=float(raw.get("written_at_ms", 0.0)),
                        original_path=raw.get("original_path"),
                        original_vm=raw.get("original_vm"),
                    )
                )
        return entries

    def append(
        self,
        capsule: ProvenanceCapsule,
        original: Optional[OriginalFile] = None,
        written_at_ms: float = 0.0,
    ) -> int:
        if not capsule.bound:
            raise ValueError(f"capsule b_id={capsule.b_id} is not bound; refusing to log it")
        seq = self._next_seq
        payload = capsule_to_dict(capsule, original)
        payload["sequence"] = seq
        payload["written_at_ms"] = written_at_ms
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(payload, sort_keys=True))
                fh.write("\n")
        except OSError as exc:
            raise IOError(f"capsule log append failed: {exc}") from exc
        self._next_seq = seq + 1
        entry = CapsuleLogEntry(
            sequence=seq,
            capsule=capsule,
            written_at_ms=written_at_ms,
            original_path=original.path if original else None,
            original_vm=original.vm_id if original else None,
        )
        self._index[capsule.b_id] = entry
        return seq

    def lookup(self, b_id: int) -> Optional[ProvenanceCapsule]:
        entry = self._index.get(b_id)
        return entry.capsule if entry else None

    def entries(self) -> list[CapsuleLogEntry]:
        return self._scan()

    def __len__(self) -> int:
        return self._next_seq - 1


def append_capsule(
    log: CapsuleLog,
    capsule: ProvenanceCapsule,
    original: Optional[OriginalFile] = None,
    written_at_ms: float = 0.0,
) -> int:
    return log.append(capsule, original, written_at_ms)


def lookup(log: CapsuleLog, b_id: int) -> Optional[ProvenanceCapsule]:
    return log.lookup(b_id)
