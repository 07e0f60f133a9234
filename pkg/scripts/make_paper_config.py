#!/usr/bin/env python3
"""Write the calibrated reference-shaped workload config (936 instances,
six size classes) to a JSON file usable with `provcap simulate --config`."""

import argparse
import json

from provcap.simulate import paper_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="path for the config JSON")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(paper_config(args.seed).to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
