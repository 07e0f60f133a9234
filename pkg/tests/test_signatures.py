import itertools
import random

import pytest
from hypothesis import given, strategies as st

from provcap.signatures import SignatureKind, detect_copy, detect_create, detect_signatures
from conftest import make_event
from oracle_signatures import detector_keys, oracle_keys


def test_plain_create_is_detected():
    trace = [make_event(1, "CREATE", "/a", proc="p1")]
    found = detect_create(trace)
    assert len(found) == 1
    assert found[0].kind is SignatureKind.FILE_CREATED
    assert found[0].subject_path == "/a"
    assert found[0].witness_events == (1,)


def test_same_process_rename_suppresses_create():
    trace = [
        make_event(1, "CREATE", "/a", proc="p1"),
        make_event(2, "RENAME", "/a", proc="p1", obj="/b"),
    ]
    assert detect_create(trace) == []


def test_empty_trace():
    assert detect_create([]) == []
    assert detect_copy([]) == []
    assert detect_signatures([]) == []


def test_cross_process_rename_never_suppresses():
    # both orderings of CREATE in p1 and RENAME in p2
    create = ("CREATE", "/a", "p1", None)
    rename = ("RENAME", "/a", "p2", "/b")
    for perm in itertools.permutations([create, rename]):
        trace = [
            make_event(i + 1, op, path, proc=proc, obj=obj)
            for i, (op, path, proc, obj) in enumerate(perm)
        ]
        found = detect_create(trace)
        assert [c.subject_path for c in found] == ["/a"]
        assert detector_keys(trace) == oracle_keys(trace)


def test_explicit_copy_event():
    trace = [make_event(1, "COPY", "/a", proc="p1", obj="/b")]
    found = detect_copy(trace)
    assert len(found) == 1
    assert found[0].subject_path == "/b"
    assert found[0].source_path == "/a"


def test_implicit_copy_chain():
    trace = [
        make_event(1, "CREATE", "/b", proc="p1"),
        make_event(2, "READ", "/a", proc="p1", nbytes=1024),
        make_event(3, "WRITE", "/b", proc="p1", nbytes=1024),
    ]
    found = detect_copy(trace)
    assert len(found) == 1
    assert found[0].subject_path == "/b"
    assert found[0].source_path == "/a"
    assert found[0].witness_events == (1, 2, 3)


def test_lone_read_is_not_a_copy():
    assert detect_copy([make_event(1, "READ", "/a", proc="p1")]) == []


def test_zero_byte_write_is_not_a_copy():
    trace = [
        make_event(1, "CREATE", "/b", proc="p1"),
        make_event(2, "READ", "/a", proc="p1", nbytes=1024),
        make_event(3, "WRITE", "/b", proc="p1", nbytes=0),
    ]
    assert detect_copy(trace) == []


def test_union_ordering_by_first_witness():
    trace = [
        make_event(1, "COPY", "/a", proc="p1", obj="/b"),
        make_event(2, "CREATE", "/a", proc="p2"),
    ]
    found = detect_signatures(trace)
    assert [c.kind for c in found] == [SignatureKind.FILE_COPIED, SignatureKind.FILE_CREATED]
    assert len(found) == 2


def test_directory_prefix_filter():
    trace = [
        make_event(1, "CREATE", "/tmp/x", proc="p1"),
        make_event(2, "CREATE", "/data/y", proc="p1"),
    ]
    found = detect_create(trace, dir_prefix="/data/")
    assert [c.subject_path for c in found] == ["/data/y"]


def test_detection_is_deterministic():
    rng = random.Random(7)
    for _ in range(50):
        trace = _random_trace(rng, rng.randint(0, 8))
        assert detect_signatures(trace) == detect_signatures(trace)


def _random_trace(rng, length):
    events = []
    for i in range(length):
        op = rng.choice(["CREATE", "RENAME", "COPY", "READ", "WRITE"])
        path = rng.choice(["/a", "/b"])
        other = "/b" if path == "/a" else "/a"
        obj = other if op in ("COPY", "RENAME") else None
        events.append(
            make_event(
                i + 1,
                op,
                path,
                proc=rng.choice(["p1", "p2"]),
                obj=obj,
                nbytes=1024 if op == "WRITE" else 0,
            )
        )
    return events


def test_oracle_equivalence_random_traces():
    rng = random.Random(11)
    for _ in range(500):
        trace = _random_trace(rng, rng.randint(0, 6))
        assert detector_keys(trace) == oracle_keys(trace)


@given(st.data())
def test_appending_rename_is_monotone_suppressive(data):
    rng = random.Random(data.draw(st.integers(0, 2**32)))
    trace = _random_trace(rng, data.draw(st.integers(0, 6)))
    path = data.draw(st.sampled_from(["/a", "/b"]))
    proc = data.draw(st.sampled_from(["p1", "p2"]))
    other = "/b" if path == "/a" else "/a"
    extended = trace + [make_event(len(trace) + 1, "RENAME", path, proc=proc, obj=other)]

    def created_count(t):
        return sum(
            1
            for c in detect_create(t)
            if c.subject_path == path and c.process_id == proc
        )

    assert created_count(extended) <= created_count(trace)
