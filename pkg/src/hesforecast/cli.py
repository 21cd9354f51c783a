"""Command-line front end.

Subcommands::

    gen      one simulated demand series as ``period,demand`` CSV
    trace    per-period forecasts of several methods along one series
    run      Monte-Carlo grid, one result table per scenario
    h2h      TSB against HES with tuned factors (RGRMSE and PB)
    compare  check a result table against a golden table

Options may also come from a JSON file given with ``--config``; flags on the
command line override it.  Exit codes: 0 success, 1 comparison failed,
2 usage or validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from .experiment import (
    GOLDEN_COMPARISONS,
    GOLDEN_TABLES,
    SELECTIONS,
    ExperimentSpec,
    ResultTable,
    TableFormatError,
    Tolerances,
    comparison_csv,
    compare_tables,
    head_to_head,
    load_comparison,
    load_golden,
    read_comparison,
    report_row,
    run_grid,
    trace_forecasts,
)
from .forecasters import Method, SmoothingParams
from .generators import Constant, Geometric, Logarithmic, Scenario, generate_series, parse_size, run_rng
from .metrics import DegenerateSeriesError

log = logging.getLogger("hesforecast")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

DEFAULTS = {
    "seed": 0,
    "out": None,
    "format": "csv",
    "threads": os.cpu_count() or 1,
    "issue_only": False,
    "size": "log:0.9",
    "p0": 0.5,
    "profile": "stationary",
    "horizon": 120,
    "init_len": 10_000,
    "cutoff": None,
    "scenario": None,
    "table": None,
    "methods": "CR,SBA,SY,TSB,HES",
    "alphas": "0.1,0.2,0.3",
    "betas": "0.01,0.02,0.03,0.04,0.05,0.1,0.2,0.3",
    "runs": 100,
    "abs_mase": False,
    "alpha": 0.1,
    "beta": 0.1,
    "selection": "u2_best",
    "tol_mase": 0.02,
    "tol_mmr": 0.05,
    "tol_u2": 0.02,
    "tol_rgrmse": 0.05,
    "tol_pb": 5.0,
    "verbose": False,
}

# trace defaults reproduce the decay illustration: unit demands with probability 0.25
TRACE_DEFAULTS = {"size": "const:1", "p0": 0.25, "horizon": 100, "init_len": 0, "methods": "SY,TSB,HES"}


class UsageError(Exception):
    pass


def _flag(parser, *names, **kw):
    kw.setdefault("default", None)
    parser.add_argument(*names, **kw)


def _switch(parser, name, help):
    parser.add_argument(name, action="store_const", const=True, default=None, help=help)


def _shared(p):
    _flag(p, "--config", help="JSON file of option values")
    _flag(p, "--seed", type=int, help="64-bit base seed")
    _flag(p, "--out", help="output file (run: file or directory)")
    _flag(p, "--format", choices=("csv", "markdown"))
    _flag(p, "--threads", type=int, help="worker threads for the Monte-Carlo grid")
    _switch(p, "--issue-only", "score only periods with nonzero demand")


def _scenario_flags(p):
    _flag(p, "--size", help="size distribution: log:ELL, geo:G or const:C")
    _flag(p, "--p0", type=float, help="demand probability (initial, for nonstationary profiles)")
    _flag(p, "--profile", choices=("stationary", "decreasing", "sudden"))
    _flag(p, "--horizon", type=int, help="evaluation periods")
    _flag(p, "--init-len", type=int, help="burn-in periods")
    _flag(p, "--cutoff", type=int, help="last period with demand (sudden profile)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hesforecast", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit one simulated series")
    _shared(p)
    _scenario_flags(p)

    p = sub.add_parser("trace", help="per-period forecasts along one series")
    _shared(p)
    _scenario_flags(p)
    _flag(p, "--methods", help="comma-separated methods (default SY,TSB,HES)")
    _flag(p, "--alpha", type=float)
    _flag(p, "--beta", type=float)

    for name, helptext in (("run", "Monte-Carlo grid"), ("h2h", "TSB vs HES head to head")):
        p = sub.add_parser(name, help=helptext)
        _shared(p)
        _scenario_flags(p)
        _flag(p, "--scenario", action="append", help="scenario id such as log-0.9-p0.5-stationary (repeatable)")
        _flag(p, "--table", action="append", help=f"golden table label whose scenario to run: {', '.join(GOLDEN_TABLES)}")
        _flag(p, "--alphas", help="comma-separated alpha grid")
        _flag(p, "--betas", help="comma-separated beta grid")
        _flag(p, "--runs", type=int)
        if name == "run":
            _flag(p, "--methods", help="comma-separated methods")
            _switch(p, "--abs-mase", "also write the mean absolute scaled error")
        else:
            _flag(p, "--selection", choices=SELECTIONS)

    p = sub.add_parser("compare", help="compare a result table with a golden table")
    p.add_argument("result", help="result CSV")
    p.add_argument("golden", help=f"golden CSV path or label ({', '.join(GOLDEN_TABLES + GOLDEN_COMPARISONS)})")
    _flag(p, "--config", help="JSON file of option values")
    _flag(p, "--tol-mase", type=float)
    _flag(p, "--tol-mmr", type=float)
    _flag(p, "--tol-u2", type=float)
    _flag(p, "--tol-rgrmse", type=float)
    _flag(p, "--tol-pb", type=float)
    _switch(p, "--verbose", "list every cell, not only failures")
    return parser


def resolve(args: argparse.Namespace, command_defaults: dict | None = None) -> dict:
    """Merge built-in defaults, the JSON config file and explicit flags."""
    opts = dict(DEFAULTS)
    opts.update(command_defaults or {})
    allowed = {k for k in vars(args) if k not in ("command", "config")}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = sorted(set(loaded) - allowed)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        opts.update(loaded)
    for k, v in vars(args).items():
        if v is not None and k not in ("command", "config"):
            opts[k] = v
    return opts


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _methods(text) -> list[Method]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    methods = [Method.parse(m) for m in items if str(m).strip()]
    if not methods:
        raise UsageError("method list is empty")
    return methods


def _scenario(opts) -> Scenario:
    p0 = float(opts["p0"])
    if not 0.0 < p0 <= 1.0:
        raise UsageError(f"p0 out of range (0, 1]: {p0}")
    size = parse_size(opts["size"]) if isinstance(opts["size"], str) else opts["size"]
    return Scenario.build(
        size, p0, opts["profile"], int(opts["init_len"]), int(opts["horizon"]), opts["cutoff"]
    )


def _scenarios(opts) -> list[Scenario]:
    init_len, horizon = int(opts["init_len"]), int(opts["horizon"])
    out = []
    for sid in opts["scenario"] or []:
        out.append(Scenario.from_id(sid, init_len, horizon))
    for label in opts["table"] or []:
        if label not in GOLDEN_TABLES:
            raise UsageError(f"unknown table {label!r}")
        out.append(Scenario.from_id(load_golden(label).meta["scenario"], init_len, horizon))
    return out or [_scenario(opts)]


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_gen(opts) -> int:
    scenario = _scenario(opts)
    init, evals = generate_series(scenario, run_rng(int(opts["seed"]), 0, scenario))
    demands = list(init) + list(evals)
    _emit(_csv(((t, int(y)) for t, y in enumerate(demands, start=1)), ["period", "demand"]), opts["out"])
    return EXIT_OK


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def cmd_trace(opts) -> int:
    methods = _methods(opts["methods"])
    if opts["cutoff"] is not None and opts["profile"] == "stationary":
        opts = {**opts, "profile": "sudden"}
    scenario = _scenario(opts)
    params = SmoothingParams(float(opts["alpha"]), float(opts["beta"]))
    init, evals = generate_series(scenario, run_rng(int(opts["seed"]), 0, scenario))
    series = [int(y) for y in list(init) + list(evals)]
    traces = trace_forecasts(series, methods, params)
    header = ["period", "demand"] + [f"f_{m.value}" for m in methods]
    rows = (
        [t + 1, y] + [_fmt(traces[m.value][t]) for m in methods]
        for t, y in enumerate(series)
    )
    _emit(_csv(rows, header), opts["out"])
    return EXIT_OK


def _spec(opts, scenario, methods) -> ExperimentSpec:
    runs = int(opts["runs"])
    if runs < 1:
        raise UsageError("runs must be positive")
    return ExperimentSpec(
        scenario,
        tuple(methods),
        tuple(_floats(opts["alphas"])),
        tuple(_floats(opts["betas"])),
        runs=runs,
        base_seed=int(opts["seed"]),
        issue_only=bool(opts["issue_only"]),
        threads=max(1, int(opts["threads"])),
    )


def _destinations(opts, scenarios) -> list:
    out = opts["out"]
    if out is None:
        return [None] * len(scenarios)
    path = Path(out)
    if len(scenarios) == 1 and path.suffix:
        return [path]
    path.mkdir(parents=True, exist_ok=True)
    ext = ".md" if opts["format"] == "markdown" else ".csv"
    return [path / f"{s.id}{ext}" for s in scenarios]


def cmd_run(opts) -> int:
    methods = _methods(opts["methods"])
    scenarios = _scenarios(opts)
    dests = _destinations(opts, scenarios)
    for scenario, dest in zip(scenarios, dests):
        log.info("running %s (%d runs)", scenario.id, int(opts["runs"]))
        table = run_grid(_spec(opts, scenario, methods))
        if opts["format"] == "markdown":
            text = table.to_markdown()
        else:
            text = table.to_csv(include_abs=bool(opts["abs_mase"]))
        _emit(text, None if dest is None else str(dest))
    return EXIT_OK


def _dist_param(scenario: Scenario) -> float:
    d = scenario.size_dist
    if isinstance(d, Logarithmic):
        return d.ell
    if isinstance(d, Geometric):
        return d.g
    assert isinstance(d, Constant)
    return float(d.c)


def cmd_h2h(opts) -> int:
    rows = []
    scenarios = _scenarios(opts)
    for scenario in scenarios:
        spec = _spec(opts, scenario, (Method.TSB, Method.HES))
        report = head_to_head(spec, opts["selection"])
        rows.append(report_row(report, _dist_param(scenario), scenario.init_p0))
    meta = {"runs": opts["runs"], "seed": opts["seed"], "scenarios": " ".join(s.id for s in scenarios)}
    _emit(comparison_csv(rows, meta), opts["out"])
    return EXIT_OK


def _read_text(path_or_label: str, labels) -> str:
    if path_or_label in labels and not Path(path_or_label).exists():
        return resources.files("hesforecast").joinpath("golden", f"{path_or_label}.csv").read_text()
    return Path(path_or_label).read_text()


def _is_comparison(text: str) -> bool:
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            return line.startswith("dist_param")
    return False


def cmd_compare(opts, result_path: str, golden_ref: str) -> int:
    labels = GOLDEN_TABLES + GOLDEN_COMPARISONS
    result_text = _read_text(result_path, ())
    golden_text = _read_text(golden_ref, labels)
    if _is_comparison(golden_text):
        return _compare_comparisons(opts, result_text, golden_text)
    result = _parse_table(result_text, result_path)
    golden = _parse_table(golden_text, golden_ref)
    tol = Tolerances(float(opts["tol_mase"]), float(opts["tol_mmr"]), float(opts["tol_u2"]))
    report = compare_tables(result, golden, tol)
    sys.stdout.write(report.render(verbose=bool(opts["verbose"])))
    return EXIT_OK if report.passed else EXIT_FAIL


def _parse_table(text: str, name: str) -> ResultTable:
    try:
        return ResultTable.from_csv(text)
    except TableFormatError as exc:
        raise UsageError(f"{name}: malformed table, {exc}") from None


def _compare_comparisons(opts, result_text: str, golden_text: str) -> int:
    try:
        result = {(r.dist_param, r.p0, r.selection): r for r in read_comparison(result_text)}
        golden = {(r.dist_param, r.p0, r.selection): r for r in read_comparison(golden_text)}
    except TableFormatError as exc:
        raise UsageError(f"malformed comparison table, {exc}") from None
    tol = {"rgrmse": float(opts["tol_rgrmse"]), "pb": float(opts["tol_pb"])}
    ok = True
    n = 0
    for key, r in result.items():
        if key not in golden:
            print(f"uncompared (result only): {key}")
            continue
        g = golden[key]
        for name in ("rgrmse", "pb"):
            dev = abs(getattr(r, name) - getattr(g, name))
            passed = dev <= tol[name] + 1e-12
            ok &= passed
            n += 1
            if opts["verbose"] or not passed:
                flag = "ok  " if passed else "FAIL"
                print(f"{flag} {key} {name} result={getattr(r, name):.4f} golden={getattr(g, name):.4f} dev={dev:.4f}")
    for key in golden:
        if key not in result:
            print(f"uncompared (golden only): {key}")
    print(f"{n} cells compared, {'all within tolerance' if ok else 'some failed'}")
    return EXIT_OK if ok and n else EXIT_FAIL


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "compare":
            result, golden = args.result, args.golden
            del args.result, args.golden
            return cmd_compare(resolve(args), result, golden)
        if args.command == "trace":
            opts = resolve(args, TRACE_DEFAULTS)
        else:
            opts = resolve(args)
        return {"gen": cmd_gen, "trace": cmd_trace, "run": cmd_run, "h2h": cmd_h2h}[args.command](opts)
    except (UsageError, DegenerateSeriesError, ValueError) as exc:
        print(f"hesforecast {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hesforecast {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
