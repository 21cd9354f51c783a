"""One-step-ahead forecasters for intermittent demand.

Every method follows the same per-period protocol::

    f = forecast(state)       # forecast for the coming period
    state = update(state, y)  # observe the realised demand y

States are immutable dataclasses; ``update`` returns a new state.
:class:`ForecasterBank` runs the same recurrences over numpy arrays so that
many parameter combinations and simulation runs advance together.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Union

import numpy as np


class Method(str, enum.Enum):
    SES = "SES"
    CR = "CR"
    SBA = "SBA"
    SY = "SY"
    TSB = "TSB"
    HES = "HES"

    @classmethod
    def parse(cls, name: str) -> "Method":
        try:
            return cls(name.strip().upper())
        except ValueError:
            raise ValueError(f"unknown method {name!r}") from None

    @property
    def single_factor(self) -> bool:
        """True for methods run with beta tied to alpha."""
        return self in (Method.SES, Method.CR, Method.SBA, Method.SY)


CROSTON_VARIANTS = (Method.CR, Method.SBA, Method.SY)


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing factors: ``alpha`` for demand sizes (or the SES level),
    ``beta`` for intervals or the demand probability."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0.0 < value < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")

    @classmethod
    def tied(cls, alpha: float) -> "SmoothingParams":
        return cls(alpha, alpha)


def _check_demand(y: float) -> float:
    y = float(y)
    if not y >= 0.0:  # also rejects NaN
        raise ValueError(f"demand must be non-negative, got {y!r}")
    return y


@dataclass(frozen=True)
class SesState:
    params: SmoothingParams
    level: float = 1.0

    def forecast(self) -> float:
        return self.level

    def update(self, y: float) -> "SesState":
        y = _check_demand(y)
        a = self.params.alpha
        return replace(self, level=a * y + (1 - a) * self.level)


@dataclass(frozen=True)
class CrostonState:
    """Croston-family state shared by CR, SBA and SY.

    ``zero_run`` counts zero-demand periods since the last demand, so the
    interval fed to smoothing on a demand is ``zero_run + 1``.
    """

    params: SmoothingParams
    variant: Method = Method.CR
    y_hat: float = 1.0
    tau_hat: float = 1.0
    zero_run: int = 0

    def __post_init__(self):
        if self.variant not in CROSTON_VARIANTS:
            raise ValueError(f"not a Croston variant: {self.variant}")

    def forecast(self) -> float:
        b = self.params.beta
        if self.variant is Method.CR:
            return self.y_hat / self.tau_hat
        if self.variant is Method.SBA:
            return (1 - b / 2) * self.y_hat / self.tau_hat
        return (1 - b / 2) * self.y_hat / (self.tau_hat - b / 2)

    def update(self, y: float) -> "CrostonState":
        y_hat, tau_hat, zero_run = _croston_update(self, _check_demand(y))
        return replace(self, y_hat=y_hat, tau_hat=tau_hat, zero_run=zero_run)


@dataclass(frozen=True)
class HesState:
    """Hyperbolic-exponential smoothing state.

    Sizes and intervals are smoothed exactly as in Croston's method.  The
    demand probability is a Beta-posterior estimate with pseudocounts
    ``c1 = 2/beta`` and ``c0 = c1 * (tau_hat - 1)``: with the current
    interval ``zero_run + 1`` periods long so far, the forecast is

        y_hat / (tau_hat + beta * zero_run / 2)

    so it equals the Croston forecast right after a demand and its
    reciprocal grows by ``beta / (2 * y_hat)`` per zero period.
    """

    params: SmoothingParams
    y_hat: float = 1.0
    tau_hat: float = 1.0
    zero_run: int = 0

    @property
    def c1(self) -> float:
        return 2 / self.params.beta

    @property
    def c0(self) -> float:
        return 2 * (self.tau_hat - 1) / self.params.beta

    @property
    def elapsed(self) -> int:
        """Length so far of the current inter-demand interval."""
        return self.zero_run + 1

    def denominator(self) -> float:
        return self.tau_hat + self.params.beta * (self.elapsed - 1) / 2

    def demand_probability(self) -> float:
        """Posterior probability of a demand in the coming period."""
        return 1 / self.denominator()

    def forecast(self) -> float:
        return self.y_hat / self.denominator()

    def update(self, y: float) -> "HesState":
        y_hat, tau_hat, zero_run = _croston_update(self, _check_demand(y))
        return replace(self, y_hat=y_hat, tau_hat=tau_hat, zero_run=zero_run)


def _croston_update(state, y: float) -> tuple[float, float, int]:
    if y == 0:
        return state.y_hat, state.tau_hat, state.zero_run + 1
    a, b = state.params.alpha, state.params.beta
    tau = state.zero_run + 1
    return a * y + (1 - a) * state.y_hat, b * tau + (1 - b) * state.tau_hat, 0


@dataclass(frozen=True)
class TsbState:
    params: SmoothingParams
    y_hat: float = 1.0
    p_hat: float = 1.0

    def forecast(self) -> float:
        return self.p_hat * self.y_hat

    def update(self, y: float) -> "TsbState":
        y = _check_demand(y)
        a, b = self.params.alpha, self.params.beta
        if y == 0:
            return replace(self, p_hat=(1 - b) * self.p_hat)
        return replace(
            self,
            y_hat=a * y + (1 - a) * self.y_hat,
            p_hat=b * 1.0 + (1 - b) * self.p_hat,
        )


ForecasterState = Union[SesState, CrostonState, TsbState, HesState]


def init_state(method: Method | str, params: SmoothingParams) -> ForecasterState:
    """Fresh state with the arbitrary starting values y_hat = tau_hat = 1.

    TSB starts from p_hat = 1 / tau_hat = 1.
    """
    method = Method.parse(method) if isinstance(method, str) else method
    if not isinstance(params, SmoothingParams):
        raise TypeError("params must be SmoothingParams")
    if method is Method.SES:
        return SesState(params)
    if method is Method.TSB:
        return TsbState(params)
    if method is Method.HES:
        return HesState(params)
    return CrostonState(params, variant=method)


def method_of(state: ForecasterState) -> Method:
    if isinstance(state, CrostonState):
        return state.variant
    return {SesState: Method.SES, TsbState: Method.TSB, HesState: Method.HES}[type(state)]


def forecast(state: ForecasterState) -> float:
    return state.forecast()


def update(state: ForecasterState, y: float) -> ForecasterState:
    return state.update(y)


def step(state: ForecasterState, y: float) -> tuple[float, ForecasterState]:
    """Forecast the period, then absorb its demand."""
    return state.forecast(), state.update(y)


def run_series(state: ForecasterState, series) -> tuple[list[float], ForecasterState]:
    """Apply :func:`step` along ``series``; returns the forecasts made and the final state."""
    out = []
    for y in series:
        f, state = step(state, y)
        out.append(f)
    return out, state


def burn_in(state: ForecasterState, series) -> ForecasterState:
    for y in series:
        state = state.update(y)
    return state


FAMILY = {
    Method.SES: "ses",
    Method.CR: "croston",
    Method.SBA: "croston",
    Method.SY: "croston",
    Method.HES: "croston",
    Method.TSB: "tsb",
}


class ForecasterBank:
    """Vectorised forecasters: ``k`` parameter pairs advancing ``r`` runs.

    State arrays have shape ``(k, r)``; each :meth:`update` consumes one
    period of demand for every run (shape ``(r,)``).  CR, SBA, SY and HES
    share their state recurrences, so one bank serves all four and
    :meth:`forecast` takes the variant to evaluate.  The arithmetic mirrors
    the scalar states operation for operation and agrees with them bit for
    bit.
    """

    def __init__(self, method: Method | str, params: list[SmoothingParams], runs: int):
        self.method = Method.parse(method) if isinstance(method, str) else method
        self.family = FAMILY[self.method]
        if not params:
            raise ValueError("at least one parameter pair is required")
        self.params = list(params)
        self.alpha = np.array([p.alpha for p in params], dtype=float)[:, None]
        self.beta = np.array([p.beta for p in params], dtype=float)[:, None]
        shape = (len(params), runs)
        self.y_hat = np.ones(shape)  # also the SES level
        self.tau_hat = np.ones(shape)
        self.p_hat = np.ones(shape)
        self.zero_run = np.zeros(shape)

    def forecast(self, method: Method | str | None = None) -> np.ndarray:
        m = self.method if method is None else Method.parse(method)
        if FAMILY[m] != self.family:
            raise ValueError(f"{m.value} cannot be read from a {self.family} bank")
        b = self.beta
        if m is Method.SES:
            return self.y_hat.copy()
        if m is Method.CR:
            return self.y_hat / self.tau_hat
        if m is Method.SBA:
            return (1 - b / 2) * self.y_hat / self.tau_hat
        if m is Method.SY:
            return (1 - b / 2) * self.y_hat / (self.tau_hat - b / 2)
        if m is Method.TSB:
            return self.p_hat * self.y_hat
        return self.y_hat / (self.tau_hat + b * ((self.zero_run + 1) - 1) / 2)

    def update(self, y: np.ndarray) -> None:
        y = np.asarray(y, dtype=float)
        a, b = self.alpha, self.beta
        if self.family == "ses":
            self.y_hat = a * y + (1 - a) * self.y_hat
            return
        nz = y != 0
        self.y_hat = np.where(nz, a * y + (1 - a) * self.y_hat, self.y_hat)
        if self.family == "tsb":
            self.p_hat = np.where(nz, b * 1.0 + (1 - b) * self.p_hat, (1 - b) * self.p_hat)
            return
        tau = self.zero_run + 1
        self.tau_hat = np.where(nz, b * tau + (1 - b) * self.tau_hat, self.tau_hat)
        self.zero_run = np.where(nz, 0.0, tau)

    def run(self, series: np.ndarray, burn: int = 0, methods=None) -> dict:
        """Feed ``series`` (shape ``(r, n)``) through the bank.

        The first ``burn`` periods only update state.  Returns, for each of
        ``methods`` (default: the bank's own), the forecasts made for the
        remaining periods with shape ``(k, r, n - burn)``.
        """
        methods = [self.method] if methods is None else [Method.parse(m) for m in methods]
        series = np.asarray(series, dtype=float)
        r, n = series.shape
        cols = np.ascontiguousarray(series.T)
        for t in range(burn):
            self.update(cols[t])
        out = {m: np.empty((len(self.params), r, n - burn)) for m in methods}
        for t in range(burn, n):
            for m in methods:
                out[m][:, :, t - burn] = self.forecast(m)
            self.update(cols[t])
        return out
