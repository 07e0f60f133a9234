"""Command-line entry point: simulate, replay, report, verify.

Exit codes are a stable contract:
  0  success (and benchmark gate passed / verification clean)
  2  domain failure: gate failed or verification found violations
  1  operational error (bad config, unreadable inputs, ...)

The PROVCAP_SEED environment variable overrides --seed when set.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

from provcap import capsule as eng
from provcap import report as rpt
from provcap import simulate as sim
from provcap import stats, store
from provcap.signatures import detect_signatures


def _config_sha256(cfg: sim.SimConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _load_config(path: str) -> sim.SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return sim.SimConfig.from_dict(json.load(fh))


def _effective_seed(args) -> int | None:
    env = os.environ.get("PROVCAP_SEED")
    if env is not None:
        return int(env)
    return args.seed


def _write_batches_json(path: str, results, seed: int, config_sha256: str) -> None:
    payload = {
        "seed": seed,
        "config_sha256": config_sha256,
        "batches": [
            {
                "class_index": r.class_index,
                "vm_count": r.vm_count,
                "size_mb": r.size_mb,
                "tgd_s": r.tgd_s,
                "imt_s": r.imt_s,
                "retries_total": r.retries_total,
                "samples": [
                    {
                        "vm_id": s.vm_id,
                        "size_mb": s.size_mb,
                        "encapsulation_delay_s": s.encapsulation_delay_s,
                        "retries": s.retries,
                    }
                    for s in r.samples
                ],
            }
            for r in results
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _load_batches_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    results = [
        sim.BatchResult(
            class_index=b["class_index"],
            vm_count=b["vm_count"],
            size_mb=b["size_mb"],
            samples=[
                sim.DelaySample(
                    vm_id=s["vm_id"],
                    size_mb=s["size_mb"],
                    encapsulation_delay_s=s["encapsulation_delay_s"],
                    retries=s["retries"],
                )
                for s in b["samples"]
            ],
            tgd_s=b["tgd_s"],
            imt_s=b["imt_s"],
            retries_total=b["retries_total"],
        )
        for b in payload["batches"]
    ]
    return results, payload["seed"], payload["config_sha256"]


def _append_capsules(log_path: str, state: eng.EngineState) -> store.CapsuleLog:
    if os.path.exists(log_path):
        os.remove(log_path)
    log = store.CapsuleLog(log_path)
    files = {f.b_id: f for f in state.data_files}
    for b_id in sorted(state.prov_files):
        capsule = state.prov_files[b_id]
        if not capsule.bound:
            continue
        last_ts = capsule.records[-1].timestamp_ms if capsule.records else 0.0
        log.append(capsule, files.get(b_id), written_at_ms=last_ts)
    return log


def cmd_simulate(args) -> int:
    try:
        cfg = _load_config(args.config)
        seed = _effective_seed(args)
        if seed is not None:
            cfg = sim.SimConfig.from_dict({**cfg.to_dict(), "seed": seed})
        if args.parallelism is not None:
            cfg = sim.SimConfig.from_dict({**cfg.to_dict(), "parallelism": args.parallelism})
        if not cfg.classes or cfg.total_instances == 0:
            print("error: empty workload (no vm instances configured)", file=sys.stderr)
            return 1
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: cannot load config: {exc}", file=sys.stderr)
        return 1

    os.makedirs(args.out, exist_ok=True)
    sha = _config_sha256(cfg)
    run = sim.run_simulation(cfg)

    store.write_trace(os.path.join(args.out, "trace.jsonl"), run.events)
    _append_capsules(os.path.join(args.out, "capsules.log"), run.engine)
    _write_batches_json(os.path.join(args.out, "batches.json"), run.results, cfg.seed, sha)

    rpt.write_global_delay_csv(os.path.join(args.out, "table_global_delay.csv"), run.results)
    rpt.write_delay_stats_csv(os.path.join(args.out, "table_delay_stats.csv"), run.results)
    samples = rpt.all_samples(run.results)
    freq = stats.frequency_table(samples, rpt.bins_covering(samples))
    rpt.write_frequency_csv(os.path.join(args.out, "table_frequency.csv"), freq)

    text = rpt.build_report_text(run.results, cfg.seed, sha, threshold_s=args.threshold_s)
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)

    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {"command": "simulate", "seed": cfg.seed, "config_sha256": sha},
            fh,
            sort_keys=True,
        )
        fh.write("\n")

    gate = stats.benchmark_gate(stats.mean(samples), args.threshold_s)
    print(text)
    return 0 if gate.passed else 2


def cmd_replay(args) -> int:
    try:
        events = store.load_trace(args.trace)
    except (store.ParseError, store.OrderError, OSError) as exc:
        print(f"error: cannot load trace: {exc}", file=sys.stderr)
        return 1
    try:
        state = eng.replay_trace(events)
    except eng.UnknownObjectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    eng.encapsulate_all(state)

    os.makedirs(args.out, exist_ok=True)
    _append_capsules(os.path.join(args.out, "capsules.log"), state)

    composites = detect_signatures(events)
    with open(os.path.join(args.out, "signatures.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "subject_path", "source_path", "process_id", "witness_events"])
        for c in composites:
            w.writerow(
                [c.kind.value, c.subject_path, c.source_path or "", c.process_id,
                 " ".join(map(str, c.witness_events))]
            )
    print(f"replayed {len(events)} events -> {len(state.prov_files)} capsules,"
          f" {len(composites)} composite signatures")
    return 0


def cmd_report(args) -> int:
    try:
        results, seed, sha = _load_batches_json(args.batches)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: cannot load batch results: {exc}", file=sys.stderr)
        return 1
    text = rpt.build_report_text(results, seed, sha, threshold_s=args.threshold_s)
    print(text)
    samples = rpt.all_samples(results)
    gate = stats.benchmark_gate(stats.mean(samples), args.threshold_s)
    return 0 if gate.passed else 2


def cmd_verify(args) -> int:
    try:
        log = store.CapsuleLog(args.log)
        entries = log.entries()
    except store.OrderError as exc:
        print(f"violation: sequence order: {exc}")
        return 2
    except (store.ParseError, OSError, KeyError, ValueError) as exc:
        print(f"error: cannot read capsule log: {exc}", file=sys.stderr)
        return 1

    violations = []
    seen: set[int] = set()
    for entry in entries:
        b_id = entry.capsule.b_id
        if b_id in seen:
            violations.append(f"duplicate binding b_id={b_id}")
        seen.add(b_id)
        if not entry.capsule.bound:
            violations.append(f"unbound capsule in log: b_id={b_id}")

    if args.trace:
        try:
            events = store.load_trace(args.trace)
        except (store.ParseError, store.OrderError, OSError) as exc:
            print(f"error: cannot load trace: {exc}", file=sys.stderr)
            return 1
        expected: dict[tuple[str, str], int] = {}
        for ev in events:
            key = (ev.vm_id, ev.subject_path)
            expected[key] = expected.get(key, 0) + 1
        for entry in entries:
            key = (entry.original_vm, entry.original_path)
            want = expected.get(key)
            if want is None:
                violations.append(
                    f"capsule b_id={entry.capsule.b_id} has no events in the trace"
                )
            elif len(entry.capsule.records) != want:
                violations.append(
                    f"record conservation: b_id={entry.capsule.b_id} has"
                    f" {len(entry.capsule.records)} records, trace has {want} events"
                )

    if violations:
        for v in violations:
            print(f"violation: {v}")
        return 2
    print(f"ok: {len(entries)} log entries verified")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="provcap", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="run a configured workload and write all artifacts")
    ps.add_argument("--config", required=True, help="JSON workload configuration")
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--out", required=True, help="output directory")
    ps.add_argument("--threshold-s", type=float, default=10.0)
    ps.add_argument("--parallelism", type=int, default=None)
    ps.set_defaults(func=cmd_simulate)

    pr = sub.add_parser("replay", help="rebuild capsules from a stored trace")
    pr.add_argument("--trace", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_replay)

    pp = sub.add_parser("report", help="regenerate the report from stored batch results")
    pp.add_argument("--batches", required=True)
    pp.add_argument("--threshold-s", type=float, default=10.0)
    pp.set_defaults(func=cmd_report)

    pv = sub.add_parser("verify", help="check a capsule log for integrity violations")
    pv.add_argument("--log", required=True)
    pv.add_argument("--trace", default=None, help="trace to check record conservation against")
    pv.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
