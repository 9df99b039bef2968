"""Filtering schemes that turn a ground-truth series into an observed one.

* :class:`BinomialThinning` keeps each event independently with probability ``p``.
* :class:`RiskThreshold` keeps events whose summed risk score is at most ``t``.
* :class:`CategoryStack` keeps events from the ``k`` rarest categories.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateSeriesError, ParameterError, ValidationError
from .series import RISK_MAX, CountSeries, EventLog, aggregate_daily

DEFAULT_TRIALS = 50


@dataclass(frozen=True)
class BinomialThinning:
    p: float
    trials: int = DEFAULT_TRIALS
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"thinning probability must lie in [0, 1], got {self.p}")
        if int(self.trials) < 1:
            raise ParameterError("trials must be >= 1")

    @property
    def param(self) -> float:
        return float(self.p)

    def to_dict(self) -> dict:
        return {"type": "binomial", "p": self.p, "trials": self.trials, "seed": self.seed}


@dataclass(frozen=True)
class RiskThreshold:
    t: int

    def __post_init__(self):
        if not 0 <= int(self.t) <= RISK_MAX:
            raise ParameterError(f"risk threshold must lie in [0, {RISK_MAX}], got {self.t}")

    @property
    def param(self) -> int:
        return int(self.t)

    def to_dict(self) -> dict:
        return {"type": "threshold", "t": self.t}


@dataclass(frozen=True)
class CategoryStack:
    k: int

    def __post_init__(self):
        if int(self.k) < 1:
            raise ParameterError("category stack size k must be >= 1")

    @property
    def param(self) -> int:
        return int(self.k)

    def to_dict(self) -> dict:
        return {"type": "category", "k": self.k}


SamplingScheme = Union[BinomialThinning, RiskThreshold, CategoryStack]


def scheme_from_dict(d: dict) -> SamplingScheme:
    kind = d.get("type")
    if kind == "binomial":
        return BinomialThinning(float(d["p"]), int(d.get("trials", DEFAULT_TRIALS)), int(d.get("seed", 0)))
    if kind == "threshold":
        return RiskThreshold(int(d["t"]))
    if kind == "category":
        return CategoryStack(int(d["k"]))
    raise ParameterError(f"unknown scheme type {kind!r}")


@dataclass(frozen=True, eq=False)
class TrialSet:
    series: tuple
    scheme: SamplingScheme

    def __post_init__(self):
        series = tuple(self.series)
        if not series:
            raise ValidationError("a trial set needs at least one series")
        n0, s0 = len(series[0]), series[0].start_day
        if any(len(s) != n0 or s.start_day != s0 for s in series):
            raise ValidationError("trial series must share length and start day")
        object.__setattr__(self, "series", series)

    def __len__(self) -> int:
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def matrix(self) -> np.ndarray:
        return np.vstack([s.values for s in self.series])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from (seed, trial) alone.

    Draws inside a trial are consumed in day order, so day ``t`` always maps
    to the same position of the same stream regardless of scheduling.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial)])))


def thin_one(values: np.ndarray, p: float, seed: int, trial: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if p >= 1.0:
        return values.copy()
    if p <= 0.0:
        return np.zeros_like(values)
    return trial_rng(seed, trial).binomial(values, p).astype(np.int64)


def binomial_thin(x: CountSeries, p: float, trials: int = DEFAULT_TRIALS, seed: int = 0) -> TrialSet:
    """Draw ``trials`` independent Binomial(x_t, p) thinnings of ``x``."""
    scheme = BinomialThinning(float(p), int(trials), int(seed))
    out = []
    for k in range(scheme.trials):
        y = thin_one(x.values, scheme.p, scheme.seed, k)
        out.append(CountSeries(y, x.start_day, x.label,
                               {**x.provenance, "scheme": scheme.to_dict(), "trial": k}))
    return TrialSet(tuple(out), scheme)


def _resolve_range(log: EventLog, day_range):
    return log.day_span() if day_range is None else (int(day_range[0]), int(day_range[1]))


def risk_threshold_filter(log: EventLog, t: int, day_range=None) -> CountSeries:
    """Daily counts of events whose summed risk score is ``<= t``."""
    scheme = RiskThreshold(int(t))
    lo, hi = _resolve_range(log, day_range)
    kept = log.subset(log.risk <= scheme.t)
    series = aggregate_daily(kept, (lo, hi))
    return series.with_provenance(scheme=scheme.to_dict())


def category_ranking(log: EventLog) -> list[str]:
    """Category labels from rarest to most frequent; ties broken by label."""
    totals = log.category_totals()
    return sorted(totals, key=lambda c: (totals[c], c))


def category_stack_series(log: EventLog, k: int, day_range=None) -> CountSeries:
    """Daily counts of events belonging to the ``k`` rarest categories."""
    ranking = category_ranking(log)
    if not 1 <= int(k) <= len(ranking):
        raise ParameterError(f"k must lie in [1, {len(ranking)}], got {k}")
    scheme = CategoryStack(int(k))
    lo, hi = _resolve_range(log, day_range)
    keep = np.isin(log.categories.astype(str), ranking[: scheme.k])
    series = aggregate_daily(log.subset(keep), (lo, hi))
    return series.with_provenance(scheme=scheme.to_dict(), categories=ranking[: scheme.k])


def apply_scheme(scheme: SamplingScheme, source, day_range=None) -> TrialSet:
    """Apply any scheme; real-world schemes yield a single-member trial set.

    ``source`` is a :class:`CountSeries` for thinning (an :class:`EventLog` is
    aggregated first) and an :class:`EventLog` for the other schemes.
    """
    if isinstance(scheme, BinomialThinning):
        if isinstance(source, EventLog):
            source = aggregate_daily(source, _resolve_range(source, day_range))
        return binomial_thin(source, scheme.p, scheme.trials, scheme.seed)
    if not isinstance(source, EventLog):
        raise ParameterError(f"{type(scheme).__name__} needs an event log")
    if isinstance(scheme, RiskThreshold):
        return TrialSet((risk_threshold_filter(source, scheme.t, day_range),), scheme)
    return TrialSet((category_stack_series(source, scheme.k, day_range),), scheme)


def effective_rate(y, x) -> float:
    """Fraction of ground-truth events that survived the filter."""
    yv = np.asarray(y.values if isinstance(y, CountSeries) else y, dtype=np.float64)
    xv = np.asarray(x.values if isinstance(x, CountSeries) else x, dtype=np.float64)
    if yv.shape != xv.shape:
        raise ValidationError("effective_rate needs series of equal length")
    total = xv.sum()
    if total <= 0:
        raise DegenerateSeriesError("source series has no events")
    return float(yv.sum() / total)
