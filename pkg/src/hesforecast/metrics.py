"""Forecast-accuracy measures as mergeable accumulators.

Sums are pooled over every evaluation period of every run and only divided
out in ``finalize``.  The MASE column is the *signed* mean of the scaled
forecast excess ``q = (f - y) / scale``, a bias measure that is positive when
a method over-forecasts.  The mean of ``|q|`` is reported alongside as
``mase_abs``.  MMR, U2 and the pairwise measures use ``e = y - f``; their
values do not depend on the sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PAIR_EPS = 1e-12


class DegenerateSeriesError(ValueError):
    """The scaling series has no variation."""


class EmptyAccumulatorError(ValueError):
    """Finalize called before any usable data was accumulated."""


@dataclass(frozen=True)
class ErrorRecord:
    period: int
    y: float
    f: float
    f_naive: float

    @property
    def error(self) -> float:
        return self.y - self.f

    @property
    def naive_error(self) -> float:
        return self.y - self.f_naive


@dataclass(frozen=True)
class MaseScale:
    denom: float

    def __post_init__(self):
        if not self.denom > 0:
            raise DegenerateSeriesError(f"MASE scale must be positive, got {self.denom}")


def mase_scale(series) -> MaseScale:
    """Mean absolute first difference of ``series``."""
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise DegenerateSeriesError("scaling series needs at least two values")
    denom = float(np.abs(np.diff(y)).sum() / (len(y) - 1))
    if denom == 0.0:
        raise DegenerateSeriesError("zero denominator: scaling series is constant")
    return MaseScale(denom)


def naive_forecasts(eval_series, last_init: float = 0.0) -> np.ndarray:
    """Random-walk forecasts: each period predicts the previous period's demand.

    The first evaluation period is predicted by the last initialisation demand.
    """
    y = np.asarray(eval_series, dtype=float)
    out = np.empty_like(y)
    out[..., 0] = last_init
    out[..., 1:] = y[..., :-1]
    return out


@dataclass(frozen=True)
class Scores:
    mase: float
    mmr: float
    u2: float
    mase_abs: float
    count: int


@dataclass
class MetricAccumulator:
    issue_only: bool = False
    count: int = 0
    sum_q: float = 0.0
    sum_abs_q: float = 0.0
    sum_abs_e: float = 0.0
    sum_y: float = 0.0
    sum_e2: float = 0.0
    sum_e2_naive: float = 0.0

    def add(self, record: ErrorRecord, scale: MaseScale) -> "MetricAccumulator":
        if self.issue_only and record.y == 0:
            return self
        e, en = record.error, record.naive_error
        q = (record.f - record.y) / scale.denom
        self.count += 1
        self.sum_q += q
        self.sum_abs_q += abs(q)
        self.sum_abs_e += abs(e)
        self.sum_y += record.y
        self.sum_e2 += e * e
        self.sum_e2_naive += en * en
        return self

    def add_arrays(self, y, f, f_naive, denom) -> "MetricAccumulator":
        """Accumulate arrays of periods at once.

        ``y``, ``f`` and ``f_naive`` broadcast together; ``denom`` holds the
        per-run MASE scale and broadcasts against them (e.g. shape ``(runs, 1)``
        for arrays of shape ``(runs, periods)``).
        """
        y, f, f_naive = np.broadcast_arrays(
            np.asarray(y, float), np.asarray(f, float), np.asarray(f_naive, float)
        )
        denom = np.broadcast_to(np.asarray(denom, float), y.shape)
        if self.issue_only:
            keep = y != 0
            y, f, f_naive, denom = y[keep], f[keep], f_naive[keep], denom[keep]
        e = y - f
        en = y - f_naive
        q = (f - y) / denom
        self.count += int(e.size)
        self.sum_q += float(q.sum())
        self.sum_abs_q += float(np.abs(q).sum())
        self.sum_abs_e += float(np.abs(e).sum())
        self.sum_y += float(y.sum())
        self.sum_e2 += float((e * e).sum())
        self.sum_e2_naive += float((en * en).sum())
        return self

    def merge(self, other: "MetricAccumulator") -> "MetricAccumulator":
        if self.issue_only != other.issue_only:
            raise ValueError("cannot merge accumulators with different issue_only modes")
        return MetricAccumulator(
            issue_only=self.issue_only,
            count=self.count + other.count,
            sum_q=self.sum_q + other.sum_q,
            sum_abs_q=self.sum_abs_q + other.sum_abs_q,
            sum_abs_e=self.sum_abs_e + other.sum_abs_e,
            sum_y=self.sum_y + other.sum_y,
            sum_e2=self.sum_e2 + other.sum_e2,
            sum_e2_naive=self.sum_e2_naive + other.sum_e2_naive,
        )

    def finalize(self) -> Scores:
        if self.count == 0:
            raise EmptyAccumulatorError("no records accumulated")
        if self.sum_y == 0:
            raise EmptyAccumulatorError("MMR undefined: total demand is zero")
        if self.sum_e2_naive == 0:
            raise EmptyAccumulatorError("U2 undefined: random-walk baseline has zero error")
        n = self.count
        return Scores(
            mase=self.sum_q / n,
            mmr=self.sum_abs_e / self.sum_y,
            u2=math.sqrt(self.sum_e2 / n) / math.sqrt(self.sum_e2_naive / n),
            mase_abs=self.sum_abs_q / n,
            count=n,
        )


def accumulate(acc: MetricAccumulator, record: ErrorRecord, scale: MaseScale) -> MetricAccumulator:
    return acc.add(record, scale)


def finalize(acc: MetricAccumulator) -> Scores:
    return acc.finalize()


@dataclass(frozen=True)
class PairScores:
    rgrmse: float
    pb: float
    count: int


@dataclass
class PairAccumulator:
    """Head-to-head of method A against method B.

    RGRMSE is the geometric mean of ``|e_a| / |e_b|`` with both magnitudes
    clamped at ``eps``; periods where both errors fall below ``eps`` carry no
    ratio.  PB is the percentage of periods where ``|e_a| < |e_b|`` strictly.
    """

    eps: float = PAIR_EPS
    sum_log_ratio: float = 0.0
    ratio_count: int = 0
    better_count: int = 0
    total_count: int = 0

    def add(self, e_a: float, e_b: float) -> "PairAccumulator":
        return self.add_arrays(np.array([e_a], float), np.array([e_b], float))

    def add_arrays(self, e_a, e_b) -> "PairAccumulator":
        a = np.abs(np.asarray(e_a, float)).ravel()
        b = np.abs(np.asarray(e_b, float)).ravel()
        if a.shape != b.shape:
            raise ValueError("error arrays differ in shape")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("errors must be finite")
        self.total_count += a.size
        self.better_count += int((a < b).sum())
        usable = (a >= self.eps) | (b >= self.eps)
        ratios = np.log(np.maximum(a[usable], self.eps) / np.maximum(b[usable], self.eps))
        self.sum_log_ratio += float(ratios.sum())
        self.ratio_count += int(usable.sum())
        return self

    def merge(self, other: "PairAccumulator") -> "PairAccumulator":
        return PairAccumulator(
            eps=self.eps,
            sum_log_ratio=self.sum_log_ratio + other.sum_log_ratio,
            ratio_count=self.ratio_count + other.ratio_count,
            better_count=self.better_count + other.better_count,
            total_count=self.total_count + other.total_count,
        )

    def finalize(self) -> PairScores:
        if self.total_count == 0 or self.ratio_count == 0:
            raise EmptyAccumulatorError("no error pairs accumulated")
        return PairScores(
            rgrmse=math.exp(self.sum_log_ratio / self.ratio_count),
            pb=100.0 * self.better_count / self.total_count,
            count=self.total_count,
        )


def pair_accumulate(acc: PairAccumulator, e_a: float, e_b: float) -> PairAccumulator:
    return acc.add(e_a, e_b)


def pair_finalize(acc: PairAccumulator) -> PairScores:
    return acc.finalize()
