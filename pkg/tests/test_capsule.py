import random

import pytest

from provcap.capsule import (
    AlreadyBoundError,
    DuplicateRegistrationError,
    EncapsulationFailedError,
    EngineState,
    RetryPolicy,
    UnknownObjectError,
    VirtualClock,
    encapsulate,
    encapsulate_all,
    encapsulate_with_retry,
    record_provenance,
    register_file,
    replay_trace,
)
from provcap.model import OpKind
from conftest import make_event


def test_first_registration():
    state = EngineState()
    b_id = register_file(state, "/data/f1", 512, "vm1")
    assert b_id == 1
    assert len(state.data_files) == 1
    assert state.prov_files[1].records == []
    assert not state.prov_files[1].bound


def test_two_registrations_are_distinct():
    state = EngineState()
    a = register_file(state, "/data/f1", 512, "vm1")
    b = register_file(state, "/data/f2", 512, "vm1")
    assert (a, b) == (1, 2)
    assert state.prov_files[a] is not state.prov_files[b]


def test_936_registrations():
    state = EngineState()
    bids = {register_file(state, f"/data/f{i}", 64, "vm1") for i in range(936)}
    assert len(bids) == 936
    assert len(state.prov_files) == 936


def test_duplicate_registration_rejected():
    state = EngineState()
    register_file(state, "/data/f1", 512, "vm1")
    with pytest.raises(DuplicateRegistrationError):
        register_file(state, "/data/f1", 512, "vm1")
    # same path on another vm is a different object
    register_file(state, "/data/f1", 512, "vm2")


def test_record_appends_to_matching_capsule():
    state = EngineState()
    b_id = register_file(state, "/data/f1", 512, "vm1")
    record_provenance(state, make_event(1, "WRITE", "/data/f1", vm="vm1", nbytes=100))
    capsule = state.prov_files[b_id]
    assert len(capsule.records) == 1
    assert capsule.records[0].operation is OpKind.WRITE


def test_send_records_sender_and_receiver():
    state = EngineState()
    register_file(state, "/data/f1", 512, "vmA")
    capsule = record_provenance(
        state, make_event(1, "SEND", "/data/f1", vm="vmA", obj="vmB")
    )
    rec = capsule.records[0]
    assert rec.sender == "vmA"
    assert rec.receiver == "vmB"


def test_event_on_unregistered_path_errors():
    state = EngineState()
    with pytest.raises(UnknownObjectError):
        record_provenance(state, make_event(1, "WRITE", "/nope", vm="vm1"))


def test_replay_recount_matches_raw_trace():
    rng = random.Random(3)
    state = EngineState()
    paths = [f"/f{i}" for i in range(5)]
    for p in paths:
        register_file(state, p, 10, "vm1")
    counts = {p: 0 for p in paths}
    for i in range(200):
        p = rng.choice(paths)
        record_provenance(state, make_event(i + 1, "WRITE", p, vm="vm1", nbytes=1))
        counts[p] += 1
    for p in paths:
        b_id = state.path_index[("vm1", p)]
        assert len(state.prov_files[b_id].records) == counts[p]


def test_encapsulate_sets_length_and_location():
    state = EngineState()
    b_id = register_file(state, "/data/f1", 512, "vm1")
    for i in range(3):
        record_provenance(state, make_event(i + 1, "WRITE", "/data/f1", vm="vm1", nbytes=1))
    capsule, delay = encapsulate(state, b_id, clock=VirtualClock(), cost_s=0.25)
    assert capsule.bound
    assert capsule.original_length == 512 * 2**20
    assert capsule.location == f"sb-{b_id}"
    assert state.locations[b_id] == capsule.location
    assert delay == 0.25
    assert len(capsule.records) == 3  # binding does not forge provenance records


def test_encapsulate_unknown_and_double():
    state = EngineState()
    b_id = register_file(state, "/data/f1", 512, "vm1")
    with pytest.raises(UnknownObjectError):
        encapsulate(state, 99, clock=VirtualClock(), cost_s=0.0)
    encapsulate(state, b_id, clock=VirtualClock(), cost_s=0.0)
    with pytest.raises(AlreadyBoundError):
        encapsulate(state, b_id, clock=VirtualClock(), cost_s=0.0)


def test_retry_free_when_no_failures():
    state = EngineState()
    b_id = register_file(state, "/f", 1, "vm1")
    policy = RetryPolicy(max_retries=3, failure_probability=0.0)
    _, delay, retries = encapsulate_with_retry(
        state, b_id, policy, random.Random(0), cost_sampler=lambda: 1.5, clock=VirtualClock()
    )
    assert retries == 0
    assert delay == 1.5


def test_retry_exhaustion():
    state = EngineState()
    b_id = register_file(state, "/f", 1, "vm1")
    policy = RetryPolicy(max_retries=3, failure_probability=1.0)
    with pytest.raises(EncapsulationFailedError) as exc:
        encapsulate_with_retry(
            state, b_id, policy, random.Random(0), cost_sampler=lambda: 1.0, clock=VirtualClock()
        )
    assert exc.value.attempts == 4
    assert not state.prov_files[b_id].bound


def test_retry_delay_accumulates_over_attempts():
    state = EngineState()
    b_id = register_file(state, "/f", 1, "vm1")
    policy = RetryPolicy(max_retries=10, failure_probability=0.5)
    _, total, retries = encapsulate_with_retry(
        state, b_id, policy, random.Random(12), cost_sampler=lambda: 2.0, clock=VirtualClock()
    )
    assert total == pytest.approx(2.0 * (retries + 1))


def _script(vm, path, first_id, size_bytes):
    return [
        make_event(first_id, "CREATE", path, vm=vm, proc="p1", nbytes=size_bytes),
        make_event(first_id + 1, "WRITE", path, vm=vm, proc="p1", nbytes=64),
        make_event(first_id + 2, "SEND", path, vm=vm, proc="p1", obj="peer", nbytes=64),
    ]


def test_replay_trace_rebuilds_capsules():
    events = _script("vm1", "/a", 1, 2**20) + _script("vm2", "/b", 4, 2 * 2**20)
    state = replay_trace(events)
    assert len(state.prov_files) == 2
    assert all(len(c.records) == 3 for c in state.prov_files.values())
    capsules = encapsulate_all(state)
    assert [c.original_length for c in capsules] == [2**20, 2 * 2**20]


def test_replay_determinism_byte_identical():
    from provcap.store import serialize_capsule

    events = _script("vm1", "/a", 1, 2**20) + _script("vm2", "/b", 4, 2 * 2**20)

    def run():
        state = replay_trace(events)
        encapsulate_all(state)
        return [serialize_capsule(state.prov_files[b]) for b in sorted(state.prov_files)]

    assert run() == run()


def test_binding_bijection_after_replay():
    events = _script("vm1", "/a", 1, 2**20) + _script("vm2", "/b", 4, 2**20)
    state = replay_trace(events)
    encapsulate_all(state)
    bound = [c for c in state.prov_files.values() if c.bound]
    file_bids = {f.b_id for f in state.data_files}
    assert {c.b_id for c in bound} == file_bids
    assert len(bound) == len(file_bids)
