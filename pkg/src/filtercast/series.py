"""Core time-series types: event logs, daily count series, z-normalised series."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import DayRangeError, DegenerateSeriesError, LengthError, ValidationError

SCORE_NAMES = ("impostor", "malware", "spam", "phish")
SCORE_MAX = 100
RISK_MAX = SCORE_MAX * len(SCORE_NAMES)


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


class EventRecord(NamedTuple):
    day: int
    category: str
    scores: tuple[int, int, int, int]

    @property
    def risk(self) -> int:
        return sum(self.scores)


@dataclass(frozen=True, eq=False)
class EventLog:
    """Per-event records stored column-wise.

    ``days`` is an int array, ``categories`` an array of labels and ``scores``
    an ``(n, 4)`` int array ordered (impostor, malware, spam, phish).
    ``origin_date`` optionally maps day index 0 to an ISO date.
    """

    days: np.ndarray
    categories: np.ndarray
    scores: np.ndarray
    origin_date: str | None = None

    def __post_init__(self):
        days = _frozen(self.days, np.int64).reshape(-1)
        cats = np.array([str(c) for c in np.asarray(self.categories, dtype=object).reshape(-1)], dtype=object)
        cats.setflags(write=False)
        scores = _frozen(self.scores, np.int64)
        if scores.size == 0:
            scores = _frozen(np.zeros((0, 4)), np.int64)
        if scores.ndim != 2 or scores.shape[1] != 4:
            raise ValidationError(f"scores must have shape (n, 4), got {scores.shape}")
        if not (len(days) == len(cats) == len(scores)):
            raise ValidationError("days, categories and scores must have equal length")
        if len(days) and days.min() < 0:
            raise ValidationError("day indices must be >= 0")
        if scores.size and (scores.min() < 0 or scores.max() > SCORE_MAX):
            raise ValidationError(f"score components must lie in [0, {SCORE_MAX}]")
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "categories", cats)
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_records(cls, records: Iterable, origin_date: str | None = None) -> "EventLog":
        recs = [EventRecord(int(r[0]), str(r[1]), tuple(int(v) for v in r[2])) for r in records]
        return cls(
            days=[r.day for r in recs],
            categories=[r.category for r in recs],
            scores=[r.scores for r in recs] if recs else np.zeros((0, 4)),
            origin_date=origin_date,
        )

    def __len__(self) -> int:
        return len(self.days)

    def __iter__(self) -> Iterator[EventRecord]:
        for day, cat, sc in zip(self.days, self.categories, self.scores):
            yield EventRecord(int(day), cat, tuple(int(v) for v in sc))

    @property
    def risk(self) -> np.ndarray:
        """Aggregate risk score per event (sum of the four components)."""
        return self.scores.sum(axis=1)

    def day_span(self) -> tuple[int, int]:
        if len(self) == 0:
            raise LengthError("empty event log has no day span")
        return int(self.days.min()), int(self.days.max())

    def category_totals(self) -> dict[str, int]:
        labels, counts = np.unique(self.categories.astype(str), return_counts=True)
        return {str(k): int(v) for k, v in zip(labels, counts)}

    def subset(self, mask: np.ndarray) -> "EventLog":
        mask = np.asarray(mask, dtype=bool)
        return EventLog(self.days[mask], self.categories[mask], self.scores[mask], self.origin_date)


@dataclass(frozen=True, eq=False)
class CountSeries:
    """Daily non-negative integer counts, one value per consecutive day."""

    values: np.ndarray
    start_day: int = 0
    label: str = ""
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 1:
            raise ValidationError("count series must be one-dimensional")
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValidationError("counts must be finite")
        if vals.size and np.any(vals != np.round(vals)):
            raise ValidationError("counts must be integers")
        vals = _frozen(vals, np.int64)
        if vals.size and vals.min() < 0:
            raise ValidationError("counts must be non-negative")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "start_day", int(self.start_day))
        object.__setattr__(self, "provenance", dict(self.provenance))

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountSeries):
            return NotImplemented
        return self.start_day == other.start_day and np.array_equal(self.values, other.values)

    __hash__ = None

    @property
    def days(self) -> np.ndarray:
        return np.arange(self.start_day, self.start_day + len(self.values))

    def total(self) -> int:
        return int(self.values.sum())

    def with_provenance(self, **extra) -> "CountSeries":
        return CountSeries(self.values, self.start_day, self.label, {**self.provenance, **extra})


@dataclass(frozen=True, eq=False)
class NormalizedSeries:
    """z-scored values together with the mean/std needed to undo the transform."""

    values: np.ndarray
    mean: float
    std: float
    ddof: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if not self.std > 0:
            raise DegenerateSeriesError("normalisation std must be positive")

    def __len__(self) -> int:
        return len(self.values)

    def denormalize(self, values=None) -> np.ndarray:
        vals = self.values if values is None else np.asarray(values, dtype=np.float64)
        return vals * self.std + self.mean

    def apply(self, raw) -> np.ndarray:
        """Normalise other data with this series' statistics."""
        return (np.asarray(raw, dtype=np.float64) - self.mean) / self.std


def aggregate_daily(log: EventLog, day_range: tuple[int, int] | None = None, clip: bool = False) -> CountSeries:
    """Count events per day over the inclusive ``day_range``.

    Days without events become explicit zeros.  Records outside the range raise
    :class:`DayRangeError` unless ``clip`` is set, in which case they are dropped.
    """
    if day_range is None:
        day_range = log.day_span()
    lo, hi = int(day_range[0]), int(day_range[1])
    if hi < lo:
        raise DayRangeError(f"empty day range [{lo}, {hi}]")
    days = log.days
    inside = (days >= lo) & (days <= hi)
    if not clip and not inside.all():
        bad = days[~inside]
        raise DayRangeError(f"{len(bad)} record(s) outside [{lo}, {hi}], e.g. day {int(bad[0])}")
    counts = np.bincount(days[inside] - lo, minlength=hi - lo + 1)
    return CountSeries(counts, start_day=lo, provenance={"source": "aggregate_daily"})


def znormalize(series, ddof: int = 0) -> NormalizedSeries:
    """Shift by the mean and divide by the standard deviation.

    ``ddof=0`` (population std) by default; pass ``ddof=1`` for the sample std.
    """
    vals = np.asarray(series.values if isinstance(series, (CountSeries, NormalizedSeries)) else series,
                      dtype=np.float64)
    if vals.size < 2:
        raise LengthError("normalisation needs at least two values")
    mean = float(vals.mean())
    std = float(vals.std(ddof=ddof))
    if not std > 0 or not np.isfinite(std):
        raise DegenerateSeriesError("constant series cannot be z-normalised")
    return NormalizedSeries((vals - mean) / std, mean, std, ddof)


def denormalize(ns: NormalizedSeries, values=None) -> np.ndarray:
    return ns.denormalize(values)
