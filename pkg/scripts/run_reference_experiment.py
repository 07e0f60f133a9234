#!/usr/bin/env python3
"""Run the reference-shaped workload end to end: simulate, verify the capsule
log against the trace, and print the report.  Exit code follows the CLI
contract (0 gate pass, 2 gate fail, 1 error)."""

import argparse
import json
import os
import sys

from provcap.cli import main as cli
from provcap.simulate import paper_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/reference")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    cfg_path = os.path.join(args.out, "config.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(paper_config(args.seed).to_dict(), fh, indent=2, sort_keys=True)

    rc = cli(["simulate", "--config", cfg_path, "--out", args.out])
    if rc == 1:
        return rc
    verify_rc = cli([
        "verify",
        "--log", os.path.join(args.out, "capsules.log"),
        "--trace", os.path.join(args.out, "trace.jsonl"),
    ])
    return rc or verify_rc


if __name__ == "__main__":
    sys.exit(main())
