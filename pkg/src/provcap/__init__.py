"""Activity-layer provenance capture, capsule binding and overhead simulation."""

from provcap.model import (
    ActivityEvent,
    BidRegistry,
    OpKind,
    OriginalFile,
    ProvenanceCapsule,
    ProvenanceRecord,
)

__all__ = [
    "ActivityEvent",
    "BidRegistry",
    "OpKind",
    "OriginalFile",
    "ProvenanceCapsule",
    "ProvenanceRecord",
]
