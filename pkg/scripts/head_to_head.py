"""Recompute the TSB against HES comparison rows (RGRMSE and PB).

    python scripts/head_to_head.py --family log --runs 1000

For each stationary scenario of the family, TSB and HES are tuned on the
default grid by MMR and by U2, then scored against each other.  Output uses
the schema of the golden comparison files and is followed by the golden rows
for reference.
"""

import argparse
import sys

from hesforecast.experiment import ExperimentSpec, comparison_csv, head_to_head, load_comparison, report_row
from hesforecast.generators import Scenario

FAMILIES = {
    "log": ("logcomp", [("log", 0.9), ("log", 0.001)]),
    # lumpy sizes (mean 5) first, matching the row order of the golden file
    "geo": ("geocomp", [("geo", 0.2), ("geo", 0.8)]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=FAMILIES, default="log")
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()

    label, dists = FAMILIES[args.family]
    rows = []
    for selection in ("mmr_best", "u2_best"):
        for kind, param in dists:
            for p0 in (0.5, 0.2):
                sc = Scenario.from_id(f"{kind}-{param:g}-p{p0:g}-stationary")
                spec = ExperimentSpec(sc, runs=args.runs, base_seed=args.seed, threads=args.threads)
                rows.append(report_row(head_to_head(spec, selection), param, p0))
                print(f"done {sc.id} {selection}", file=sys.stderr, flush=True)
    sys.stdout.write(comparison_csv(rows, {"runs": args.runs, "seed": args.seed}))
    print(f"\n# golden rows ({label})")
    sys.stdout.write(comparison_csv(load_comparison(label)))


if __name__ == "__main__":
    main()
