"""Rerun every golden result table and report the cell-by-cell agreement.

    python scripts/reproduce_tables.py --runs 1000 --out results/

Writes one CSV per table into ``--out`` and prints a one-line summary per
table (cells within tolerance, largest deviation).  A full sweep of all 16
tables at 1000 runs takes a few minutes.
"""

import argparse
import time
from pathlib import Path

from hesforecast.experiment import (
    GOLDEN_TABLES,
    ExperimentSpec,
    Tolerances,
    compare_tables,
    golden_scenario,
    load_golden,
    run_grid,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--tables", nargs="*", default=list(GOLDEN_TABLES))
    ap.add_argument("--show", type=int, default=5, help="failing cells to list per table")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    total_cells = total_fail = 0
    for label in args.tables:
        t0 = time.time()
        golden = load_golden(label)
        spec = ExperimentSpec(golden_scenario(label), runs=args.runs, base_seed=args.seed, threads=args.threads)
        table = run_grid(spec)
        table.meta["table"] = label
        (args.out / f"{label}.csv").write_text(table.to_csv(include_abs=True))
        rep = compare_tables(table, golden, Tolerances())
        n_fail = len(rep.failures)
        total_cells += len(rep.cells)
        total_fail += n_fail
        print(
            f"{label:<5} {spec.scenario.id:<28} {len(rep.cells) - n_fail:>3}/{len(rep.cells)} ok"
            f"  max dev {rep.max_deviation:.4f}  ({time.time() - t0:.0f}s)",
            flush=True,
        )
        for c in rep.failures[: args.show]:
            m, a, b = c.key
            print(f"      {m:<4} a={a:g} b={b:g} {c.metric:<4} {c.result:+.4f} vs {c.golden:+.4f}")
    print(f"total {total_cells - total_fail}/{total_cells} cells within tolerance")


if __name__ == "__main__":
    main()
