import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from provcap.model import ActivityEvent, OpKind


def make_event(
    event_id,
    op,
    path,
    proc="p1",
    vm="vm1",
    ts=None,
    obj=None,
    nbytes=0,
    operator="alice",
):
    return ActivityEvent(
        event_id=event_id,
        timestamp_ms=float(event_id) if ts is None else ts,
        vm_id=vm,
        process_id=proc,
        operator=operator,
        op_kind=OpKind(op),
        subject_path=path,
        object_path=obj,
        byte_count=nbytes,
    )
