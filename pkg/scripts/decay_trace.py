"""Forecast paths of SY, TSB and HES before and after demand stops.

    python scripts/decay_trace.py > trace.csv

Unit demands arrive with probability 0.25 until ``--cutoff``, then stop.  The
summary printed to stderr checks the three tail shapes: SY flat, TSB falling
by the factor (1 - beta) per period, and 1/HES rising by a fixed step.
"""

import argparse
import sys

import numpy as np

from hesforecast.experiment import trace_forecasts
from hesforecast.forecasters import SmoothingParams
from hesforecast.generators import Constant, Scenario, Sudden, generate_series, make_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--periods", type=int, default=100)
    ap.add_argument("--cutoff", type=int, default=60)
    ap.add_argument("--p", type=float, default=0.25)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--beta", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    sc = Scenario(Constant(1), Sudden(args.p, args.cutoff), args.p, init_len=0, horizon=args.periods)
    _, series = generate_series(sc, make_rng(args.seed))
    params = SmoothingParams(args.alpha, args.beta)
    tr = trace_forecasts(series, ["SY", "TSB", "HES"], params)

    print("period,demand,f_SY,f_TSB,f_HES")
    for t, y in enumerate(series):
        print(f"{t + 1},{y},{tr['SY'][t]:.6g},{tr['TSB'][t]:.6g},{tr['HES'][t]:.6g}")

    last = int(np.flatnonzero(series)[-1]) if series.any() else -1
    tail = slice(last + 2, len(series))
    sy, tsb, hes = (np.array(tr[m][tail]) for m in ("SY", "TSB", "HES"))
    if len(sy) > 2:
        print(
            f"tail from period {last + 3}: SY spread {np.ptp(sy):.3g}, "
            f"TSB ratio {np.mean(tsb[1:] / tsb[:-1]):.6f}, "
            f"1/HES step {np.mean(np.diff(1 / hes)):.6f} (sd {np.std(np.diff(1 / hes)):.2g})",
            file=sys.stderr,
        )


if __name__ == "__main__":
    main()
