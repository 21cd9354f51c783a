"""Stochastic intermittent demand.

Each period a demand occurs with probability ``p_t`` (from an occurrence
profile) and, when it does, its size is drawn from a discrete size
distribution on {1, 2, ...}.  Sizes are sampled by inverting the CDF.

Random streams are numpy ``Generator(PCG64(seed))``.  Per-run seeds come from
:func:`derive_seed`, which xors the base seed with a SplitMix64 mix of the
run index and an FNV-1a hash of the scenario id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

MASK64 = (1 << 64) - 1


# -- size distributions ------------------------------------------------------


@dataclass(frozen=True)
class Logarithmic:
    ell: float

    def __post_init__(self):
        if not 0.0 < self.ell < 1.0:
            raise ValueError(f"logarithmic parameter must lie in (0, 1), got {self.ell}")

    @property
    def mean(self) -> float:
        return -self.ell / ((1 - self.ell) * math.log1p(-self.ell))

    @property
    def variance(self) -> float:
        ell, lg = self.ell, math.log1p(-self.ell)
        return -ell * (ell + lg) / ((1 - ell) ** 2 * lg**2)


@dataclass(frozen=True)
class Geometric:
    g: float

    def __post_init__(self):
        if not 0.0 < self.g <= 1.0:
            raise ValueError(f"geometric parameter must lie in (0, 1], got {self.g}")

    @property
    def mean(self) -> float:
        return 1 / self.g

    @property
    def variance(self) -> float:
        return (1 - self.g) / self.g**2


@dataclass(frozen=True)
class Constant:
    c: int

    def __post_init__(self):
        if not (isinstance(self.c, int) and self.c >= 1):
            raise ValueError(f"constant size must be a positive integer, got {self.c!r}")

    @property
    def mean(self) -> float:
        return float(self.c)

    @property
    def variance(self) -> float:
        return 0.0


SizeDistribution = Union[Logarithmic, Geometric, Constant]


def parse_size(text: str) -> SizeDistribution:
    """Parse ``log:0.9``, ``geo:0.2`` or ``const:1``."""
    kind, sep, value = text.partition(":")
    if not sep:
        raise ValueError(f"size distribution must look like kind:param, got {text!r}")
    kind = kind.strip().lower()
    try:
        if kind in ("log", "logarithmic"):
            return Logarithmic(float(value))
        if kind in ("geo", "geometric"):
            return Geometric(float(value))
        if kind in ("const", "constant"):
            return Constant(int(value))
    except ValueError as exc:
        raise ValueError(f"bad size distribution {text!r}: {exc}") from None
    raise ValueError(f"unknown size distribution kind {kind!r}")


def size_label(dist: SizeDistribution) -> str:
    if isinstance(dist, Logarithmic):
        return f"log-{dist.ell:g}"
    if isinstance(dist, Geometric):
        return f"geo-{dist.g:g}"
    return f"const-{dist.c}"


def size_pmf(dist: SizeDistribution, k: int) -> float:
    if k < 1:
        raise ValueError(f"sizes start at 1, got k={k}")
    if isinstance(dist, Logarithmic):
        return -(dist.ell**k) / (k * math.log1p(-dist.ell))
    if isinstance(dist, Geometric):
        return (1 - dist.g) ** (k - 1) * dist.g
    return 1.0 if k == dist.c else 0.0


def _log_next(p: float, ell: float, k: int) -> float:
    # pmf(k + 1) from pmf(k)
    return p * ell * k / (k + 1)


def _invert_logarithmic(ell: float, u: float) -> int:
    k = 1
    p = -ell / math.log1p(-ell)
    c = p
    while u > c:
        p = _log_next(p, ell, k)
        k += 1
        if c + p == c:  # cumulative sum stalled just below 1
            break
        c += p
    return k


def _invert_geometric(g: float, u: float) -> int:
    if g == 1.0:
        return 1
    # 1 - u lies in (0, 1], avoiding log(0)
    return max(1, math.ceil(math.log1p(-u) / math.log1p(-g)))


def sample_size(dist: SizeDistribution, rng: np.random.Generator) -> int:
    if isinstance(dist, Constant):
        return dist.c
    u = rng.random()
    if isinstance(dist, Logarithmic):
        return _invert_logarithmic(dist.ell, u)
    return _invert_geometric(dist.g, u)


@lru_cache(maxsize=32)
def _logarithmic_cdf(ell: float) -> np.ndarray:
    """Cumulative table built with the same running sum as the scalar inverter."""
    p = -ell / math.log1p(-ell)
    cdf = [p]
    k = 1
    while cdf[-1] < 1.0 and len(cdf) < 100_000:
        p = _log_next(p, ell, k)
        k += 1
        if cdf[-1] + p == cdf[-1]:
            break
        cdf.append(cdf[-1] + p)
    return np.array(cdf)


def sample_sizes(dist: SizeDistribution, u: np.ndarray) -> np.ndarray:
    """Vectorised inversion of uniforms ``u`` in [0, 1); agrees with :func:`sample_size`."""
    u = np.asarray(u, dtype=float)
    if isinstance(dist, Constant):
        return np.full(u.shape, dist.c, dtype=np.int64)
    if isinstance(dist, Geometric):
        if dist.g == 1.0:
            return np.ones(u.shape, dtype=np.int64)
        k = np.ceil(np.log1p(-u) / math.log1p(-dist.g))
        return np.maximum(k, 1).astype(np.int64)
    cdf = _logarithmic_cdf(dist.ell)
    k = np.searchsorted(cdf, u, side="left") + 1
    beyond = k > len(cdf)
    if beyond.any():
        k[beyond] = [_invert_logarithmic(dist.ell, v) for v in u[beyond]]
    return k.astype(np.int64)


# -- occurrence profiles -----------------------------------------------------


@dataclass(frozen=True)
class Stationary:
    p0: float

    def __post_init__(self):
        _check_p0(self.p0)

    def prob(self, t: int) -> float:
        return self.p0

    kind = "stationary"


@dataclass(frozen=True)
class LinearDecreasing:
    """Falls linearly from ``p0`` at period 1 to 0 at period ``horizon``."""

    p0: float
    horizon: int

    def __post_init__(self):
        _check_p0(self.p0)
        if self.horizon < 1:
            raise ValueError("horizon must be positive")

    def prob(self, t: int) -> float:
        if t > self.horizon:
            return 0.0
        if self.horizon == 1:
            return self.p0
        return self.p0 * (self.horizon - t) / (self.horizon - 1)

    kind = "decreasing"


@dataclass(frozen=True)
class Sudden:
    """``p0`` up to and including ``cutoff``, zero afterwards."""

    p0: float
    cutoff: int

    def __post_init__(self):
        _check_p0(self.p0)
        if self.cutoff < 1:
            raise ValueError("cutoff must be positive")

    def prob(self, t: int) -> float:
        return self.p0 if t <= self.cutoff else 0.0

    kind = "sudden"


OccurrenceProfile = Union[Stationary, LinearDecreasing, Sudden]


def _check_p0(p0: float) -> None:
    if not 0.0 < p0 <= 1.0:
        raise ValueError(f"p0 out of range (0, 1]: {p0}")


def occurrence_prob(profile: OccurrenceProfile, t: int) -> float:
    if t < 1:
        raise ValueError(f"periods start at 1, got t={t}")
    return profile.prob(t)


# -- scenarios ---------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    size_dist: SizeDistribution
    profile: OccurrenceProfile
    init_p0: float
    init_len: int = 10_000
    horizon: int = 120

    def __post_init__(self):
        if self.init_len < 0:
            raise ValueError("init_len must be non-negative")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        _check_p0(self.init_p0)

    @property
    def id(self) -> str:
        return f"{size_label(self.size_dist)}-p{self.init_p0:g}-{self.profile.kind}"

    @classmethod
    def build(
        cls,
        size_dist: SizeDistribution,
        p0: float,
        kind: str = "stationary",
        init_len: int = 10_000,
        horizon: int = 120,
        cutoff: int | None = None,
    ) -> "Scenario":
        """Scenario whose profile starts from ``p0``; sudden cutoff defaults to half the horizon."""
        if kind == "stationary":
            profile = Stationary(p0)
        elif kind == "decreasing":
            profile = LinearDecreasing(p0, horizon)
        elif kind == "sudden":
            profile = Sudden(p0, cutoff if cutoff is not None else horizon // 2)
        else:
            raise ValueError(f"unknown profile kind {kind!r}")
        return cls(size_dist, profile, p0, init_len, horizon)

    @classmethod
    def from_id(cls, scenario_id: str, init_len: int = 10_000, horizon: int = 120) -> "Scenario":
        """Inverse of :attr:`id`, e.g. ``log-0.9-p0.5-stationary``."""
        parts = scenario_id.split("-")
        if len(parts) != 4 or not parts[2].startswith("p"):
            raise ValueError(f"malformed scenario id {scenario_id!r}")
        kind, param, p0, profile = parts
        return cls.build(
            parse_size(f"{kind}:{param}"), float(p0[1:]), profile, init_len, horizon
        )

    def eval_probs(self) -> np.ndarray:
        return np.array([self.profile.prob(t) for t in range(1, self.horizon + 1)])


# -- seeding -----------------------------------------------------------------


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode():
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def derive_seed(base_seed: int, run_index: int, scenario_id: str) -> int:
    """``base_seed ^ splitmix64(fnv1a64(scenario_id) + run_index)``."""
    return (base_seed & MASK64) ^ splitmix64((fnv1a64(scenario_id) + run_index) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & MASK64))


def run_rng(base_seed: int, run_index: int, scenario: Scenario) -> np.random.Generator:
    return make_rng(derive_seed(base_seed, run_index, scenario.id))


# -- series ------------------------------------------------------------------


def _draw(probs: np.ndarray, dist: SizeDistribution, rng: np.random.Generator) -> np.ndarray:
    n = len(probs)
    occurs = rng.random(n) < probs
    sizes = sample_sizes(dist, rng.random(n))
    return np.where(occurs, sizes, 0).astype(np.int64)


def generate_series(scenario: Scenario, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(init_series, eval_series)`` of non-negative integer demands.

    The initialisation stretch is stationary at ``init_p0``; the evaluation
    stretch follows the profile with its clock starting at period 1.
    """
    init = _draw(np.full(scenario.init_len, scenario.init_p0), scenario.size_dist, rng)
    evals = _draw(scenario.eval_probs(), scenario.size_dist, rng)
    return init, evals


def generate_runs(scenario: Scenario, base_seed: int, run_indices) -> np.ndarray:
    """Stack the full (init + eval) series of several runs, shape ``(runs, init_len + horizon)``."""
    rows = []
    for i in run_indices:
        init, evals = generate_series(scenario, run_rng(base_seed, i, scenario))
        rows.append(np.concatenate([init, evals]))
    return np.array(rows, dtype=np.int64).reshape(len(rows), scenario.init_len + scenario.horizon)
