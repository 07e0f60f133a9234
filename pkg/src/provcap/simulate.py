"""Deterministic workload simulator for batches of VM instances.

Each simulated instance registers one file, runs a short activity script
(create, two writes, one send), then encapsulates its provenance capsule.
Encapsulation delays are drawn from a configurable model; transient faults
trigger retries.  Batches are scheduled on a bounded pool of workers with a
per-class launch interval, which is the calibrated stand-in for the
unpublished scheduling of the reference deployment: the interval is fitted
so the expected batch makespan lands on the reference total-global-delay
value.

Everything is a pure function of the configuration: same config (including
seed), same traces, samples and results, bit for bit.
"""

from __future__ import annotations

import heapq
import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from provcap import capsule as eng
from provcap import reference
from provcap.model import ActivityEvent, OpKind


@dataclass(frozen=True)
class DelayModel:
    mean_s: float
    stddev_s: float
    distribution: str = "normal-truncated"

    def __post_init__(self):
        if self.mean_s <= 0:
            raise ValueError("mean_s must be positive")
        if self.stddev_s < 0:
            raise ValueError("stddev_s must be nonnegative")
        if self.distribution not in ("normal-truncated", "uniform"):
            raise ValueError(f"unknown distribution {self.distribution!r}")


@dataclass(frozen=True)
class ImtModel:
    """Inter-message latency as base + per-megabyte coefficient."""

    base_s: float
    per_mb_s: float

    def predict(self, size_mb: float) -> float:
        return self.base_s + self.per_mb_s * size_mb


@dataclass(frozen=True)
class VmClass:
    vm_count: int
    size_mb: float
    start_interval_s: float = 0.0
    failure_probability: Optional[float] = None

    def __post_init__(self):
        if self.vm_count <= 0:
            raise ValueError("vm_count must be positive")
        if self.size_mb <= 0:
            raise ValueError("size_mb must be positive")
        if self.start_interval_s < 0:
            raise ValueError("start_interval_s must be nonnegative")


@dataclass(frozen=True)
class SimConfig:
    seed: int
    classes: tuple[VmClass, ...]
    delay_model: DelayModel
    failure_probability: float = 0.0
    max_retries: int = 8
    imt_model: ImtModel = ImtModel(0.0, 0.0)
    parallelism: int = 16

    def __post_init__(self):
        if not 0.0 <= self.failure_probability <= 1.0:
            raise ValueError("failure_probability must be in [0, 1]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    @property
    def total_instances(self) -> int:
        return sum(c.vm_count for c in self.classes)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "classes": [
                {
                    "vm_count": c.vm_count,
                    "size_mb": c.size_mb,
                    "start_interval_s": c.start_interval_s,
                    "failure_probability": c.failure_probability,
                }
                for c in self.classes
            ],
            "delay_model": {
                "mean_s": self.delay_model.mean_s,
                "stddev_s": self.delay_model.stddev_s,
                "distribution": self.delay_model.distribution,
            },
            "failure_probability": self.failure_probability,
            "max_retries": self.max_retries,
            "imt_model": {"base_s": self.imt_model.base_s, "per_mb_s": self.imt_model.per_mb_s},
            "parallelism": self.parallelism,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return cls(
            seed=int(d["seed"]),
            classes=tuple(
                VmClass(
                    vm_count=int(c["vm_count"]),
                    size_mb=float(c["size_mb"]),
                    start_interval_s=float(c.get("start_interval_s", 0.0)),
                    failure_probability=c.get("failure_probability"),
                )
                for c in d["classes"]
            ),
            delay_model=DelayModel(
                mean_s=float(d["delay_model"]["mean_s"]),
                stddev_s=float(d["delay_model"]["stddev_s"]),
                distribution=d["delay_model"].get("distribution", "normal-truncated"),
            ),
            failure_probability=float(d.get("failure_probability", 0.0)),
            max_retries=int(d.get("max_retries", 8)),
            imt_model=ImtModel(
                base_s=float(d.get("imt_model", {}).get("base_s", 0.0)),
                per_mb_s=float(d.get("imt_model", {}).get("per_mb_s", 0.0)),
            ),
            parallelism=int(d.get("parallelism", 16)),
        )


@dataclass(frozen=True)
class DelaySample:
    vm_id: str
    size_mb: float
    encapsulation_delay_s: float
    retries: int


@dataclass
class BatchResult:
    class_index: int
    vm_count: int
    size_mb: float
    samples: list[DelaySample]
    tgd_s: float
    imt_s: float
    retries_total: int


@dataclass
class SimRun:
    results: list[BatchResult]
    events: list[ActivityEvent]
    engine: eng.EngineState


def sample_delay(rng: random.Random, model: DelayModel) -> float:
    """One positive delay draw; normal draws are resampled until positive."""
    if model.stddev_s == 0.0:
        return model.mean_s
    if model.distribution == "uniform":
        half = model.stddev_s * math.sqrt(3.0)
        lo = max(1e-9, model.mean_s - half)
        return rng.uniform(lo, model.mean_s + half)
    while True:
        x = rng.gauss(model.mean_s, model.stddev_s)
        if x > 0.0:
            return x


def fit_imt_model(pairs: Sequence[tuple[float, float]]) -> ImtModel:
    """Least-squares fit of (size_mb, imt_s) pairs."""
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    slope, intercept = statistics.linear_regression(xs, ys)
    return ImtModel(base_s=intercept, per_mb_s=slope)


def calibrate_start_interval(vm_count: int, tgd_target_s: float, mean_delay_s: float) -> float:
    """Launch interval whose expected batch makespan equals the target."""
    if vm_count < 2:
        return 0.0
    return max(0.0, (tgd_target_s - mean_delay_s) / (vm_count - 1))


def paper_config(seed: int = 0) -> SimConfig:
    """Reference-shaped configuration: 936 instances in six size classes,
    delay model and launch intervals calibrated to the published tables."""
    mean_s = reference.REFERENCE_MEAN_DELAY_S
    classes = []
    for vm_count, size_mb, tgd_s, _, retries in reference.GLOBAL_DELAY_TABLE:
        # expected retries of n instances at probability p is n*p/(1-p)
        p = retries / (vm_count + retries) if retries else 0.0
        classes.append(
            VmClass(
                vm_count=vm_count,
                size_mb=size_mb,
                start_interval_s=calibrate_start_interval(vm_count, tgd_s, mean_s),
                failure_probability=p,
            )
        )
    imt = fit_imt_model([(row[1], row[3]) for row in reference.GLOBAL_DELAY_TABLE])
    return SimConfig(
        seed=seed,
        classes=tuple(classes),
        delay_model=DelayModel(mean_s=mean_s, stddev_s=reference.REFERENCE_STDDEV),
        max_retries=8,
        imt_model=imt,
        parallelism=16,
    )


def _vm_id(class_index: int, i: int) -> str:
    return f"vm-c{class_index}-{i}"


def _instance_events(
    cfg: SimConfig, class_index: int, i: int, first_event_id: int
) -> list[ActivityEvent]:
    c = cfg.classes[class_index]
    vm = _vm_id(class_index, i)
    proc = f"proc-{class_index}-{i}"
    path = f"/data/c{class_index}/f{i}"
    start_ms = round(i * c.start_interval_s * 1000.0)
    size_bytes = int(c.size_mb * 2**20)
    spec = [
        (OpKind.CREATE, None, size_bytes),
        (OpKind.WRITE, None, 1024),
        (OpKind.WRITE, None, 2048),
        (OpKind.SEND, "controller", size_bytes),
    ]
    events = []
    for k, (op, obj, nbytes) in enumerate(spec):
        events.append(
            ActivityEvent(
                event_id=first_event_id + k,
                timestamp_ms=start_ms + 5 * k,
                vm_id=vm,
                process_id=proc,
                operator=f"tenant-{class_index}",
                op_kind=op,
                subject_path=path,
                object_path=obj,
                byte_count=nbytes,
            )
        )
    return events


def _class_events(cfg: SimConfig, class_index: int, first_event_id: int) -> list[ActivityEvent]:
    events = []
    next_id = first_event_id
    for i in range(cfg.classes[class_index].vm_count):
        script = _instance_events(cfg, class_index, i, next_id)
        events.extend(script)
        next_id += len(script)
    return events


def _instance_rng(cfg: SimConfig, class_index: int, i: int) -> random.Random:
    return random.Random(f"{cfg.seed}:{class_index}:{i}")


def _run_class(
    cfg: SimConfig,
    class_index: int,
    engine: eng.EngineState,
    first_event_id: int,
) -> tuple[BatchResult, list[ActivityEvent]]:
    c = cfg.classes[class_index]
    policy = eng.RetryPolicy(
        max_retries=cfg.max_retries,
        failure_probability=(
            c.failure_probability if c.failure_probability is not None else cfg.failure_probability
        ),
    )
    events = _class_events(cfg, class_index, first_event_id)

    samples: list[DelaySample] = []
    workers = [0.0] * cfg.parallelism
    heapq.heapify(workers)
    makespan = 0.0
    ev_cursor = 0
    for i in range(c.vm_count):
        script = events[ev_cursor : ev_cursor + 4]
        ev_cursor += 4
        b_id = eng.register_file(engine, script[0].subject_path, c.size_mb, script[0].vm_id)
        for event in script:
            eng.record_provenance(engine, event)

        rng = _instance_rng(cfg, class_index, i)
        draws: list[float] = []

        def draw() -> float:
            d = sample_delay(rng, cfg.delay_model)
            draws.append(d)
            return d

        clock = eng.VirtualClock()
        _, total_delay, retries = eng.encapsulate_with_retry(
            engine, b_id, policy, rng, cost_sampler=draw, clock=clock
        )

        scheduled = i * c.start_interval_s
        start = max(scheduled, heapq.heappop(workers))
        finish = start + total_delay
        heapq.heappush(workers, finish)
        makespan = max(makespan, finish)

        # the binding delay of the successful attempt, excluding retry time
        samples.append(
            DelaySample(
                vm_id=script[0].vm_id,
                size_mb=c.size_mb,
                encapsulation_delay_s=draws[-1],
                retries=retries,
            )
        )

    result = BatchResult(
        class_index=class_index,
        vm_count=c.vm_count,
        size_mb=c.size_mb,
        samples=samples,
        tgd_s=makespan,
        imt_s=cfg.imt_model.predict(c.size_mb),
        retries_total=sum(s.retries for s in samples),
    )
    return result, events


def simulate_class(cfg: SimConfig, class_index: int) -> BatchResult:
    if not 0 <= class_index < len(cfg.classes):
        raise IndexError(f"class_index {class_index} out of range")
    engine = eng.EngineState()
    result, _ = _run_class(cfg, class_index, engine, first_event_id=1)
    return result


def run_simulation(cfg: SimConfig) -> SimRun:
    """Run every class through one shared engine; returns results, the full
    event trace and the final engine state."""
    engine = eng.EngineState()
    results: list[BatchResult] = []
    events: list[ActivityEvent] = []
    next_id = 1
    for ci in range(len(cfg.classes)):
        result, class_events = _run_class(cfg, ci, engine, first_event_id=next_id)
        results.append(result)
        events.extend(class_events)
        next_id += len(class_events)
    return SimRun(results=results, events=events, engine=engine)


def simulate_all(cfg: SimConfig) -> list[BatchResult]:
    return run_simulation(cfg).results


def emit_trace(cfg: SimConfig) -> list[ActivityEvent]:
    """The full activity trace the simulation feeds through the capsule
    engine, without running the delay model."""
    events = []
    next_id = 1
    for ci in range(len(cfg.classes)):
        class_events = _class_events(cfg, ci, next_id)
        events.extend(class_events)
        next_id += len(class_events)
    return events
