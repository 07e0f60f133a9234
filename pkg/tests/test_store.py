import json
import random

import pytest

from provcap.capsule import EngineState, VirtualClock, encapsulate, record_provenance, register_file
from provcap.model import ProvenanceCapsule
from provcap.store import (
    CapsuleLog,
    OrderError,
    ParseError,
    append_capsule,
    capsule_from_dict,
    capsule_to_dict,
    load_trace,
    lookup,
    serialize_capsule,
    write_trace,
)
from conftest import make_event


def _trace(n):
    return [make_event(i + 1, "WRITE", f"/f{i % 3}", vm="vm1", nbytes=i) for i in range(n)]


def test_trace_round_trip(tmp_path):
    path = str(tmp_path / "t.jsonl")
    events = _trace(20) + [make_event(21, "COPY", "/a", obj="/b"), make_event(22, "SEND", "/a", obj="vm2")]
    write_trace(path, events)
    assert load_trace(path) == events


def test_empty_trace_file(tmp_path):
    path = str(tmp_path / "t.jsonl")
    write_trace(path, [])
    assert load_trace(path) == []


def test_event_id_regression_is_order_error(tmp_path):
    path = str(tmp_path / "t.jsonl")
    write_trace(path, _trace(2))
    with open(path, "a") as fh:
        fh.write(json.dumps({
            "event_id": 1, "timestamp_ms": 9.0, "vm_id": "vm1", "process_id": "p1",
            "operator": "alice", "op_kind": "READ", "subject_path": "/x", "byte_count": 0,
        }) + "\n")
    with pytest.raises(OrderError) as exc:
        load_trace(path)
    assert exc.value.line_no == 3


def test_malformed_line_reports_line_number(tmp_path):
    path = str(tmp_path / "t.jsonl")
    write_trace(path, _trace(1))
    with open(path, "a") as fh:
        fh.write("{not json\n")
    with pytest.raises(ParseError) as exc:
        load_trace(path)
    assert exc.value.line_no == 2


def test_unknown_field_rejected(tmp_path):
    path = str(tmp_path / "t.jsonl")
    with open(path, "w") as fh:
        fh.write(json.dumps({
            "event_id": 1, "timestamp_ms": 0.0, "vm_id": "v", "process_id": "p",
            "operator": "o", "op_kind": "READ", "subject_path": "/x", "byte_count": 0,
            "surprise": True,
        }) + "\n")
    with pytest.raises(ParseError):
        load_trace(path)


def test_trace_round_trip_random_simulator_output(tmp_path):
    from provcap.simulate import emit_trace, paper_config, SimConfig, VmClass, DelayModel

    rng = random.Random(9)
    for _ in range(5):
        cfg = SimConfig(
            seed=rng.randint(0, 1000),
            classes=tuple(
                VmClass(vm_count=rng.randint(1, 5), size_mb=rng.choice([1, 64, 512]),
                        start_interval_s=rng.random())
                for _ in range(rng.randint(1, 3))
            ),
            delay_model=DelayModel(mean_s=5.0, stddev_s=1.0),
        )
        events = emit_trace(cfg)
        path = str(tmp_path / "t.jsonl")
        write_trace(path, events)
        assert load_trace(path) == events


def _bound(b_id_path="/data/f1", n=2):
    state = EngineState()
    b_id = register_file(state, b_id_path, 16, "vm1")
    for i in range(n):
        record_provenance(state, make_event(i + 1, "WRITE", b_id_path, vm="vm1", nbytes=1))
    capsule, _ = encapsulate(state, b_id, clock=VirtualClock(), cost_s=0.0)
    original = state.data_files[0]
    return capsule, original


def test_capsule_serialization_round_trip():
    capsule, original = _bound()
    restored = capsule_from_dict(json.loads(serialize_capsule(capsule, original)))
    assert restored == capsule
    d = capsule_to_dict(capsule, original)
    assert d["original_path"] == "/data/f1"
    assert d["original_length"] == 16 * 2**20


def test_log_append_and_lookup(tmp_path):
    log = CapsuleLog(str(tmp_path / "c.log"))
    capsule, original = _bound()
    assert append_capsule(log, capsule, original) == 1
    assert lookup(log, capsule.b_id) == capsule
    assert lookup(log, 999) is None


def test_unbound_capsule_rejected(tmp_path):
    log = CapsuleLog(str(tmp_path / "c.log"))
    with pytest.raises(ValueError):
        log.append(ProvenanceCapsule(b_id=1))


def test_936_appends_monotone_sequences(tmp_path):
    log = CapsuleLog(str(tmp_path / "c.log"))
    state = EngineState()
    seqs = []
    for i in range(936):
        b_id = register_file(state, f"/f{i}", 1, "vm1")
        capsule, _ = encapsulate(state, b_id, clock=VirtualClock(), cost_s=0.0)
        seqs.append(log.append(capsule))
    assert seqs == list(range(1, 937))
    assert len(log) == 936
    entries = log.entries()
    assert [e.sequence for e in entries] == seqs


def test_append_only_and_read_back(tmp_path):
    path = str(tmp_path / "c.log")
    log = CapsuleLog(path)
    capsule, original = _bound()
    log.append(capsule, original, written_at_ms=2.0)
    before = open(path).read()
    capsule2, original2 = _bound("/data/f2")
    log.append(capsule2, original2, written_at_ms=3.0)
    after = open(path).read()
    assert after.startswith(before)  # prior entries untouched
    entry = log.entries()[0]
    assert entry.capsule == capsule
    assert entry.written_at_ms == 2.0


def test_lookup_agrees_with_linear_scan(tmp_path):
    log = CapsuleLog(str(tmp_path / "c.log"))
    rng = random.Random(4)
    state = EngineState()
    for i in range(50):
        b_id = register_file(state, f"/f{i}", 1, "vm1")
        capsule, _ = encapsulate(state, b_id, clock=VirtualClock(), cost_s=0.0)
        log.append(capsule)
    entries = log.entries()
    for _ in range(1000):
        b_id = rng.randint(1, 80)
        scan = None
        for e in entries:
            if e.capsule.b_id == b_id:
                scan = e.capsule
        assert log.lookup(b_id) == scan


def test_reopened_log_continues_sequence(tmp_path):
    path = str(tmp_path / "c.log")
    log = CapsuleLog(path)
    capsule, original = _bound()
    log.append(capsule, original)
    log2 = CapsuleLog(path)
    capsule2, original2 = _bound("/data/f2")
    assert log2.append(capsule2, original2) == 2
