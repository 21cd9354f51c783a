"""Monte-Carlo experiment grid, result tables and golden-table comparison.

Protocol per run: draw one demand series (burn-in stretch followed by the
evaluation horizon) and feed the same series to every method.  The burn-in
only updates state; forecasts over the horizon are scored.  The MASE scale
comes from that run's burn-in series and errors are pooled over all runs.

Runs are processed in fixed-size chunks, each chunk vectorised with
:class:`~hesforecast.forecasters.ForecasterBank`.  Chunk results are merged in
chunk order, so a table depends only on the experiment settings and seed, not
on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .forecasters import FAMILY, ForecasterBank, ForecasterState, Method, SmoothingParams, burn_in, init_state
from .generators import Scenario, generate_runs, generate_series
from .metrics import (
    DegenerateSeriesError,
    ErrorRecord,
    MaseScale,
    MetricAccumulator,
    PairAccumulator,
    mase_scale,
    naive_forecasts,
)

DEFAULT_ALPHAS = (0.1, 0.2, 0.3)
DEFAULT_BETAS = (0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3)
DEFAULT_METHODS = (Method.CR, Method.SBA, Method.SY, Method.TSB, Method.HES)
CHUNK_RUNS = 250

GOLDEN_TABLES = (
    "sta1", "sta2", "sta3", "sta4",
    "stu1", "stu2", "stu3", "stu4",
    "dec1", "dec2", "dec3", "dec4",
    "obs1", "obs2", "obs3", "obs4",
)
GOLDEN_COMPARISONS = ("logcomp", "geocomp")


class TableFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _k(x: float) -> float:
    return round(float(x), 9)


def combo_key(method: Method | str, params: SmoothingParams) -> tuple[str, float, float]:
    return (Method(method).value, _k(params.alpha), _k(params.beta))


# -- experiment settings -----------------------------------------------------


@dataclass
class ExperimentSpec:
    scenario: Scenario
    methods: tuple = DEFAULT_METHODS
    alpha_grid: tuple = DEFAULT_ALPHAS
    beta_grid: tuple = DEFAULT_BETAS
    runs: int = 100
    base_seed: int = 0
    issue_only: bool = False
    threads: int = 1
    combos: list | None = None

    def __post_init__(self):
        self.methods = tuple(Method.parse(m) if isinstance(m, str) else m for m in self.methods)
        if self.runs < 1:
            raise ValueError("runs must be positive")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    def expand(self) -> list[tuple[Method, SmoothingParams]]:
        """Method/parameter combos; single-factor methods only get beta = alpha."""
        if self.combos is not None:
            return [(Method.parse(m) if isinstance(m, str) else m, p) for m, p in self.combos]
        out = []
        for m in self.methods:
            if m.single_factor:
                out.extend((m, SmoothingParams.tied(a)) for a in self.alpha_grid)
            else:
                out.extend((m, SmoothingParams(a, b)) for a in self.alpha_grid for b in self.beta_grid)
        return out


# -- single run (scalar reference path) --------------------------------------


@dataclass
class RunResult:
    records: list[ErrorRecord]
    scale: MaseScale
    burned: ForecasterState
    init_series: np.ndarray
    eval_series: np.ndarray


def run_single(method: Method | str, params: SmoothingParams, scenario: Scenario, rng) -> RunResult:
    """One run through the scalar state machine.

    Used as the reference that the vectorised grid is checked against.
    """
    init, evals = generate_series(scenario, rng)
    scale = mase_scale(init)
    state = burn_in(init_state(method, params), init)
    burned = state
    prev = float(init[-1]) if len(init) else 0.0
    records = []
    for t, y in enumerate(evals, start=1):
        f = state.forecast()
        records.append(ErrorRecord(t, float(y), f, prev))
        state = state.update(y)
        prev = float(y)
    return RunResult(records, scale, burned, init, evals)


# -- vectorised chunks -------------------------------------------------------


@dataclass
class _Chunk:
    evals: np.ndarray  # (r, H)
    naive: np.ndarray  # (r, H)
    denom: np.ndarray  # (r, 1)
    forecasts: dict  # method -> (k, r, H)


def _simulate_chunk(scenario: Scenario, base_seed: int, run_indices, groups: dict) -> _Chunk:
    series = generate_runs(scenario, base_seed, run_indices)
    n0 = scenario.init_len
    init, evals = series[:, :n0], series[:, n0:]
    if n0 < 2:
        raise DegenerateSeriesError("MASE scale needs an initialisation series of length >= 2")
    denom = np.abs(np.diff(init, axis=1)).sum(axis=1) / (n0 - 1)
    if (denom == 0).any():
        bad = list(run_indices)[int(np.argmax(denom == 0))]
        raise DegenerateSeriesError(f"zero denominator: run {bad} has a constant initialisation series")
    naive = naive_forecasts(evals, init[:, -1])
    forecasts = {}
    for family in ("ses", "croston", "tsb"):
        methods = [m for m in groups if FAMILY[m] == family]
        if not methods:
            continue
        # one bank per family over the union of parameter pairs
        union = list(dict.fromkeys(p for m in methods for p in groups[m]))
        out = ForecasterBank(methods[0], union, len(series)).run(series, burn=n0, methods=methods)
        for m in methods:
            idx = [union.index(p) for p in groups[m]]
            forecasts[m] = out[m][idx]
    return _Chunk(evals.astype(float), naive, denom[:, None], forecasts)


def _chunks(runs: int, size: int = CHUNK_RUNS) -> list[range]:
    return [range(i, min(i + size, runs)) for i in range(0, runs, size)]


def _group(combos) -> dict:
    groups: dict = {}
    for m, p in combos:
        groups.setdefault(m, []).append(p)
    return groups


def _map_chunks(spec: ExperimentSpec, fn):
    chunks = _chunks(spec.runs)
    if spec.threads == 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=spec.threads) as pool:
        return list(pool.map(fn, chunks))


# -- result tables -----------------------------------------------------------


class Row(NamedTuple):
    mase: float
    mmr: float
    u2: float


METRICS = ("mase", "mmr", "u2")


@dataclass
class ResultTable:
    rows: dict = field(default_factory=dict)  # (method, alpha, beta) -> Row
    meta: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    mase_abs: dict = field(default_factory=dict)

    def get(self, method: str, alpha: float, beta: float) -> Row:
        return self.rows[(Method.parse(method).value, _k(alpha), _k(beta))]

    def method_rows(self, method: str) -> dict:
        m = Method.parse(method).value
        return {k[1:]: v for k, v in self.rows.items() if k[0] == m}

    def to_csv(self, include_abs: bool = False) -> str:
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}: {v}\n")
        cols = ["method", "alpha", "beta", *METRICS]
        if include_abs:
            cols.append("mase_abs")
        if self.notes:
            cols.append("notes")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for key, row in self.rows.items():
            out = [key[0], f"{key[1]:g}", f"{key[2]:g}", *(f"{x:.6g}" for x in row)]
            if include_abs:
                a = self.mase_abs.get(key)
                out.append("" if a is None else f"{a:.6g}")
            if self.notes:
                out.append(self.notes.get(key, ""))
            w.writerow(out)
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [f"<!-- {k}: {v} -->" for k, v in self.meta.items()]
        lines += ["| method | alpha | beta | MASE | MMR | U2 |", "|---|---|---|---|---|---|"]
        for key, row in self.rows.items():
            vals = " | ".join(f"{x:.3f}" for x in row)
            lines.append(f"| {key[0]} | {key[1]:.2f} | {key[2]:.2f} | {vals} |")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        meta, body = _split_meta(text)
        table = cls(meta=meta)
        header = None
        for lineno, rec in body:
            if header is None:
                header = [h.strip() for h in rec]
                missing = {"method", "alpha", "beta", *METRICS} - set(header)
                if missing:
                    raise TableFormatError(f"missing columns {sorted(missing)}", lineno)
                continue
            if len(rec) != len(header):
                raise TableFormatError(f"expected {len(header)} fields, got {len(rec)}", lineno)
            d = dict(zip(header, rec))
            try:
                key = (Method.parse(d["method"]).value, _k(float(d["alpha"])), _k(float(d["beta"])))
                row = Row(*(float(d[m]) for m in METRICS))
            except ValueError as exc:
                raise TableFormatError(str(exc), lineno) from None
            if key in table.rows:
                raise TableFormatError(f"duplicate row {key}", lineno)
            table.rows[key] = row
            if d.get("mase_abs"):
                table.mase_abs[key] = float(d["mase_abs"])
            if d.get("notes"):
                table.notes[key] = d["notes"]
        if header is None:
            raise TableFormatError("no header row")
        return table

    @classmethod
    def read(cls, path) -> "ResultTable":
        return cls.from_csv(Path(path).read_text())


GoldenTable = ResultTable


def _split_meta(text: str):
    """Separate ``# key: value`` lines from the CSV body.

    Returns the metadata and a list of ``(line number, fields)`` records.
    """
    meta = {}
    body = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            k, sep, v = line[1:].partition(":")
            if sep:
                meta[k.strip()] = v.strip()
        elif line.strip():
            body.append((lineno, next(csv.reader([line]))))
    return meta, body


def load_golden(label: str) -> ResultTable:
    if label not in GOLDEN_TABLES:
        raise KeyError(f"no golden table {label!r}")
    text = resources.files("hesforecast").joinpath("golden", f"{label}.csv").read_text()
    return ResultTable.from_csv(text)


def golden_scenario(label: str, init_len: int = 10_000, horizon: int = 120) -> Scenario:
    return Scenario.from_id(load_golden(label).meta["scenario"], init_len, horizon)


def run_grid(spec: ExperimentSpec) -> ResultTable:
    """Pool metrics over ``spec.runs`` runs for every combo and finalise."""
    combos = spec.expand()
    groups = _group(combos)

    def work(chunk):
        c = _simulate_chunk(spec.scenario, spec.base_seed, chunk, groups)
        accs = {}
        for m, plist in groups.items():
            for j, p in enumerate(plist):
                acc = MetricAccumulator(issue_only=spec.issue_only)
                accs[combo_key(m, p)] = acc.add_arrays(c.evals, c.forecasts[m][j], c.naive, c.denom)
        return accs

    parts = _map_chunks(spec, work)
    table = ResultTable(
        meta={
            "scenario": spec.scenario.id,
            "runs": spec.runs,
            "seed": spec.base_seed,
            "issue_only": str(spec.issue_only).lower(),
        }
    )
    for m, p in combos:
        key = combo_key(m, p)
        acc = parts[0][key]
        for part in parts[1:]:
            acc = acc.merge(part[key])
        s = acc.finalize()
        table.rows[key] = Row(s.mase, s.mmr, s.u2)
        table.mase_abs[key] = s.mase_abs
    return table


# -- comparison --------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    mase: float = 0.02
    mmr: float = 0.05
    u2: float = 0.02

    def __getitem__(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class Cell:
    key: tuple
    metric: str
    result: float
    golden: float
    deviation: float
    passed: bool


@dataclass
class ComparisonReport:
    cells: list
    result_only: list
    golden_only: list

    @property
    def failures(self) -> list:
        return [c for c in self.cells if not c.passed]

    @property
    def passed(self) -> bool:
        return bool(self.cells) and not self.failures

    @property
    def max_deviation(self) -> float:
        return max((c.deviation for c in self.cells), default=0.0)

    def render(self, verbose: bool = False) -> str:
        lines = []
        for c in self.cells:
            if verbose or not c.passed:
                flag = "ok  " if c.passed else "FAIL"
                m, a, b = c.key
                lines.append(
                    f"{flag} {m:<4} a={a:<5g} b={b:<5g} {c.metric:<4} "
                    f"result={c.result:+.4f} golden={c.golden:+.4f} dev={c.deviation:.4f}"
                )
        for key in self.golden_only:
            lines.append(f"uncompared (golden only): {key}")
        for key in self.result_only:
            lines.append(f"uncompared (result only): {key}")
        n_fail = len(self.failures)
        lines.append(
            f"{len(self.cells) - n_fail}/{len(self.cells)} cells within tolerance, "
            f"{n_fail} failed, max deviation {self.max_deviation:.4f}"
        )
        return "\n".join(lines) + "\n"


def compare_tables(result: ResultTable, golden: ResultTable, tolerances: Tolerances = Tolerances()) -> ComparisonReport:
    cells = []
    for key, row in result.rows.items():
        if key not in golden.rows:
            continue
        gold = golden.rows[key]
        for name, r, g in zip(METRICS, row, gold):
            dev = abs(r - g)
            cells.append(Cell(key, name, r, g, dev, dev <= tolerances[name] + 1e-12))
    return ComparisonReport(
        cells=cells,
        result_only=[k for k in result.rows if k not in golden.rows],
        golden_only=[k for k in golden.rows if k not in result.rows],
    )


# -- head to head ------------------------------------------------------------


SELECTIONS = ("mmr_best", "u2_best")


@dataclass
class HeadToHeadReport:
    scenario_id: str
    selection: str
    tsb: SmoothingParams
    hes: SmoothingParams
    rgrmse: float
    pb: float
    grid: ResultTable | None = None


def select_best(table: ResultTable, method: Method | str, criterion: str) -> SmoothingParams:
    """Grid point minimising ``criterion`` (``mmr`` or ``u2``); ties go to the first row."""
    if criterion not in ("mmr", "u2"):
        raise ValueError(f"unknown criterion {criterion!r}")
    rows = table.method_rows(method)
    if not rows:
        raise KeyError(f"no rows for {method}")
    (a, b), _ = min(rows.items(), key=lambda kv: getattr(kv[1], criterion))
    return SmoothingParams(a, b)


def pair_errors(spec: ExperimentSpec, a: tuple, b: tuple) -> PairAccumulator:
    """Pool |e_a| against |e_b| over every scored period of every run."""
    groups = _group([a, b]) if a[0] != b[0] else {a[0]: [a[1], b[1]]}

    def work(chunk):
        c = _simulate_chunk(spec.scenario, spec.base_seed, chunk, groups)
        fa = c.forecasts[a[0]][groups[a[0]].index(a[1])]
        fb = c.forecasts[b[0]][groups[b[0]].index(b[1])]
        ea, eb = c.evals - fa, c.evals - fb
        if spec.issue_only:
            keep = c.evals != 0
            ea, eb = ea[keep], eb[keep]
        return PairAccumulator().add_arrays(ea, eb)

    parts = _map_chunks(spec, work)
    acc = parts[0]
    for p in parts[1:]:
        acc = acc.merge(p)
    return acc


def head_to_head(spec: ExperimentSpec, selection: str = "u2_best", grid: ResultTable | None = None) -> HeadToHeadReport:
    """Tune TSB and HES separately on the grid, then score HES against TSB."""
    selection = selection.lower().replace("-", "_")
    if selection not in SELECTIONS:
        raise ValueError(f"selection must be one of {SELECTIONS}")
    if grid is None:
        grid_spec = ExperimentSpec(
            spec.scenario, (Method.TSB, Method.HES), spec.alpha_grid, spec.beta_grid,
            spec.runs, spec.base_seed, spec.issue_only, spec.threads,
        )
        grid = run_grid(grid_spec)
    criterion = selection.split("_")[0]
    tsb = select_best(grid, Method.TSB, criterion)
    hes = select_best(grid, Method.HES, criterion)
    scores = pair_errors(spec, (Method.HES, hes), (Method.TSB, tsb)).finalize()
    return HeadToHeadReport(spec.scenario.id, selection, tsb, hes, scores.rgrmse, scores.pb, grid)


@dataclass(frozen=True)
class ComparisonRow:
    dist_param: float
    p0: float
    selection: str
    alpha_tsb: float
    beta_tsb: float
    alpha_hes: float
    beta_hes: float
    rgrmse: float
    pb: float
    notes: str = ""


COMPARISON_COLUMNS = ("dist_param", "p0", "selection", "alpha_tsb", "beta_tsb", "alpha_hes", "beta_hes", "rgrmse", "pb")


def load_comparison(label: str) -> list[ComparisonRow]:
    if label not in GOLDEN_COMPARISONS:
        raise KeyError(f"no comparison table {label!r}")
    text = resources.files("hesforecast").joinpath("golden", f"{label}.csv").read_text()
    return read_comparison(text)


def read_comparison(text: str) -> list[ComparisonRow]:
    _, body = _split_meta(text)
    header = None
    rows = []
    for lineno, rec in body:
        if header is None:
            header = rec
            if list(header[: len(COMPARISON_COLUMNS)]) != list(COMPARISON_COLUMNS):
                raise TableFormatError("unexpected comparison header", lineno)
            continue
        d = dict(zip(header, rec))
        try:
            rows.append(
                ComparisonRow(
                    float(d["dist_param"]), float(d["p0"]), d["selection"],
                    float(d["alpha_tsb"]), float(d["beta_tsb"]),
                    float(d["alpha_hes"]), float(d["beta_hes"]),
                    float(d["rgrmse"]), float(d["pb"]), d.get("notes", ""),
                )
            )
        except (KeyError, ValueError) as exc:
            raise TableFormatError(str(exc), lineno) from None
    return rows


def report_row(report: HeadToHeadReport, dist_param: float, p0: float) -> ComparisonRow:
    return ComparisonRow(
        dist_param, p0, report.selection,
        report.tsb.alpha, report.tsb.beta, report.hes.alpha, report.hes.beta,
        report.rgrmse, report.pb,
    )


def comparison_csv(rows: Iterable[ComparisonRow], meta: dict | None = None) -> str:
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARISON_COLUMNS)
    for r in rows:
        w.writerow([
            f"{r.dist_param:g}", f"{r.p0:g}", r.selection,
            f"{r.alpha_tsb:g}", f"{r.beta_tsb:g}", f"{r.alpha_hes:g}", f"{r.beta_hes:g}",
            f"{r.rgrmse:.6g}", f"{r.pb:.6g}",
        ])
    return buf.getvalue()


# -- traces ------------------------------------------------------------------


def trace_forecasts(series, methods, params: SmoothingParams) -> dict:
    """Per-period one-step forecasts of each method along ``series``."""
    out = {}
    for m in methods:
        state = init_state(m, params)
        fs = []
        for y in series:
            fs.append(state.forecast())
            state = state.update(y)
        out[Method.parse(m).value if isinstance(m, str) else m.value] = fs
    return out


def all_finite(table: ResultTable) -> bool:
    return all(math.isfinite(x) for row in table.rows.values() for x in row)
