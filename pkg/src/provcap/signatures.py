"""Composite file-operation signature detection over ordered event traces.

Two signatures are recognized:

* FILE_CREATED -- a CREATE of path P in process p with no later RENAME of P
  in the same process anywhere in the trace.
* FILE_COPIED  -- either an explicit COPY event, or a CREATE of path N in
  process p followed later (same process) by a READ of a different path O and
  a WRITE of N with a positive byte count.  READ and WRITE each come after
  the CREATE; no mutual order between them is required.

Detection is a pure function of the trace: same trace, same output.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from provcap.model import ActivityEvent, OpKind, check_trace


class SignatureKind(str, Enum):
    FILE_CREATED = "FILE_CREATED"
    FILE_COPIED = "FILE_COPIED"


@dataclass(frozen=True)
class CompositeOperation:
    kind: SignatureKind
    subject_path: str
    process_id: str
    source_path: Optional[str] = None
    witness_events: tuple[int, ...] = ()

    @property
    def key(self) -> tuple:
        return (self.kind.value, self.subject_path, self.source_path, self.process_id)


def detect_create(
    trace: Sequence[ActivityEvent], dir_prefix: Optional[str] = None
) -> list[CompositeOperation]:
    """One FILE_CREATED per CREATE with no later same-process RENAME of the path.

    dir_prefix, when given, restricts detection to CREATEs under that path
    prefix.  The suppression window is the whole trace.
    """
    check_trace(trace)
    # (path, process) -> event_ids of RENAMEs, for the "no later rename" test.
    renames: dict[tuple[str, str], list[int]] = {}
    for ev in trace:
        if ev.op_kind is OpKind.RENAME:
            renames.setdefault((ev.subject_path, ev.process_id), []).append(ev.event_id)

    out = []
    for ev in trace:
        if ev.op_kind is not OpKind.CREATE:
            continue
        if dir_prefix is not None and not ev.subject_path.startswith(dir_prefix):
            continue
        later = renames.get((ev.subject_path, ev.process_id), ())
        if any(rid > ev.event_id for rid in later):
            continue
        out.append(
            CompositeOperation(
                kind=SignatureKind.FILE_CREATED,
                subject_path=ev.subject_path,
                process_id=ev.process_id,
                witness_events=(ev.event_id,),
            )
        )
    return out


def detect_copy(trace: Sequence[ActivityEvent]) -> list[CompositeOperation]:
    """FILE_COPIED for explicit COPY events and for CREATE+READ+WRITE chains."""
    check_trace(trace)
    out = []
    for ev in trace:
        if ev.op_kind is OpKind.COPY:
            out.append(
                CompositeOperation(
                    kind=SignatureKind.FILE_COPIED,
                    subject_path=ev.object_path,
                    process_id=ev.process_id,
                    source_path=ev.subject_path,
                    witness_events=(ev.event_id,),
                )
            )

    # Implicit copy: CREATE dest, then READ source + WRITE dest in-process.
    seen: set[tuple[str, str, str]] = set()
    for i, c in enumerate(trace):
        if c.op_kind is not OpKind.CREATE:
            continue
        reads: dict[str, int] = {}
        write_id = None
        for later in trace[i + 1 :]:
            if later.process_id != c.process_id:
                continue
            if later.op_kind is OpKind.READ and later.subject_path != c.subject_path:
                reads.setdefault(later.subject_path, later.event_id)
            elif (
                later.op_kind is OpKind.WRITE
                and later.subject_path == c.subject_path
                and later.byte_count > 0
                and write_id is None
            ):
                write_id = later.event_id
        if write_id is None:
            continue
        for source, read_id in sorted(reads.items(), key=lambda kv: kv[1]):
            dedup = (c.subject_path, source, c.process_id)
            if dedup in seen:
                continue
            seen.add(dedup)
            out.append(
                CompositeOperation(
                    kind=SignatureKind.FILE_COPIED,
                    subject_path=c.subject_path,
                    process_id=c.process_id,
                    source_path=source,
                    witness_events=tuple(sorted((c.event_id, read_id, write_id))),
                )
            )
    return out


def detect_signatures(
    trace: Sequence[ActivityEvent], dir_prefix: Optional[str] = None
) -> list[CompositeOperation]:
    """Union of both detectors, ordered by first witness event id."""
    found = detect_create(trace, dir_prefix=dir_prefix) + detect_copy(trace)
    return sorted(found, key=lambda c: (c.witness_events[0], c.key))
