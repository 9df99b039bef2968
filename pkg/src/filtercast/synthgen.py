"""Synthetic ground truth: Poisson INAR(1) count series and labelled event logs.

``X_t = Binomial(X_{t-1}, alpha) + Poisson(lam)`` has stationary mean
``lam / (1 - alpha)`` and lag-k autocorrelation ``alpha**k``, which makes it a
convenient reference process for thinning experiments.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, ValidationError
from .series import SCORE_MAX, SCORE_NAMES, CountSeries, EventLog

WEEKLY_PATTERN = (1.3, 1.2, 1.1, 1.0, 0.9, 0.6, 0.5)


@dataclass(frozen=True)
class InarSpec:
    alpha: float
    lam: float
    T: int = 365
    seed: int = 0
    season: tuple | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if int(self.T) < 30:
            raise ParameterError(f"T must be >= 30, got {self.T}")
        if self.season is not None:
            s = tuple(float(v) for v in self.season)
            if not s or min(s) < 0:
                raise ParameterError("season multipliers must be a non-empty list of non-negative numbers")
            object.__setattr__(self, "season", s)

    @property
    def mean(self) -> float:
        """Stationary mean of the non-seasonal process."""
        return self.lam / (1.0 - self.alpha)

    def acf(self, lag: int) -> float:
        return self.alpha ** int(lag)


def high_volume(T: int = 365, seed: int = 0) -> InarSpec:
    """High-volume preset, mean about 2233 events per day."""
    return InarSpec(0.9, 223.3, T, seed)


def low_volume(T: int = 365, seed: int = 0) -> InarSpec:
    """Low-volume preset, mean about 184 events per day."""
    return InarSpec(0.7, 184 * 0.3, T, seed)


def weekly(alpha: float = 0.3, lam: float = 70.0, T: int = 365, seed: int = 0,
           pattern=WEEKLY_PATTERN) -> InarSpec:
    """INAR(1) with the innovation rate modulated by a 7-day pattern."""
    return InarSpec(alpha, lam, T, seed, tuple(pattern))


def gen_inar(spec: InarSpec) -> CountSeries:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(spec.seed) & (2**64 - 1))))
    T = int(spec.T)
    rates = np.full(T, spec.lam)
    if spec.season is not None:
        pat = np.asarray(spec.season)
        rates = spec.lam * pat[np.arange(T) % len(pat)]
    x = np.empty(T, dtype=np.int64)
    x[0] = rng.poisson(spec.mean)
    for t in range(1, T):
        x[t] = rng.binomial(x[t - 1], spec.alpha) + rng.poisson(rates[t])
    prov = {"source": "inar", "alpha": spec.alpha, "lambda": spec.lam, "seed": spec.seed}
    if spec.season is not None:
        prov["season"] = list(spec.season)
    return CountSeries(x, 0, "inar", prov)


@dataclass(frozen=True)
class ScoreProfile:
    """Integer triangular distribution on ``[low, high]`` peaking at ``mode``."""

    low: int
    mode: int
    high: int

    def __post_init__(self):
        if not 0 <= self.low <= self.mode <= self.high <= SCORE_MAX:
            raise ValidationError(f"score profile needs 0 <= low <= mode <= high <= {SCORE_MAX}, "
                                  f"got ({self.low}, {self.mode}, {self.high})")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.low == self.high:
            return np.full(n, self.low, dtype=np.int64)
        # continuous triangular on [low, high + 1) floored to integers
        v = rng.triangular(self.low, self.mode + 0.5, self.high + 1, size=n)
        return np.minimum(np.floor(v).astype(np.int64), self.high)


@dataclass(frozen=True)
class CategorySpec:
    label: str
    weight: float
    scores: tuple = field(default_factory=lambda: tuple(ScoreProfile(0, 0, 0) for _ in SCORE_NAMES))

    def __post_init__(self):
        if not self.weight > 0:
            raise ValidationError(f"category {self.label!r} needs a positive weight")
        if len(self.scores) != len(SCORE_NAMES):
            raise ValidationError(f"category {self.label!r} needs {len(SCORE_NAMES)} score profiles")


@dataclass(frozen=True)
class LabelSpec:
    categories: tuple

    def __post_init__(self):
        cats = tuple(self.categories)
        if not cats:
            raise ValidationError("label spec needs at least one category")
        labels = [c.label for c in cats]
        if len(set(labels)) != len(labels):
            raise ValidationError("category labels must be unique")
        object.__setattr__(self, "categories", cats)

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.categories]

    @property
    def weights(self) -> np.ndarray:
        w = np.array([c.weight for c in self.categories], dtype=np.float64)
        return w / w.sum()

    def to_dict(self) -> dict:
        return {"categories": [
            {"label": c.label, "weight": c.weight,
             "scores": {name: [p.low, p.mode, p.high] for name, p in zip(SCORE_NAMES, c.scores)}}
            for c in self.categories]}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelSpec":
        cats = []
        try:
            for c in d["categories"]:
                scores = c.get("scores", {})
                profiles = tuple(ScoreProfile(*(int(v) for v in scores.get(name, (0, 0, 0))))
                                 for name in SCORE_NAMES)
                cats.append(CategorySpec(str(c["label"]), float(c["weight"]), profiles))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed label spec: {exc}") from exc
        return cls(tuple(cats))

    @classmethod
    def load(cls, path) -> "LabelSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _profile(level: int) -> tuple:
    """Four score profiles centred on ``level``; rarer categories score riskier."""
    lo, hi = max(0, level - 25), min(SCORE_MAX, level + 25)
    return tuple(ScoreProfile(lo, level, hi) for _ in SCORE_NAMES)


def skewed_labels() -> LabelSpec:
    """Six categories with strongly skewed frequencies; the rarest carry the highest risk."""
    table = [
        ("Invalid Recipients", 0.45, 10),
        ("Bulk", 0.30, 20),
        ("Marketing", 0.15, 30),
        ("Stopped by Content Filter", 0.06, 45),
        ("Malicious URLs", 0.03, 60),
        ("Virus Detected", 0.01, 75),
    ]
    return LabelSpec(tuple(CategorySpec(lab, w, _profile(level)) for lab, w, level in table))


def gen_labeled_log(series: CountSeries, labels: LabelSpec, seed: int = 0) -> EventLog:
    """Expand each daily count into that many labelled, scored events."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & (2**64 - 1))))
    counts = np.asarray(series.values, dtype=np.int64)
    days = np.repeat(np.arange(len(counts), dtype=np.int64) + series.start_day, counts)
    n = len(days)
    cat_idx = rng.choice(len(labels.categories), size=n, p=labels.weights)
    scores = np.zeros((n, len(SCORE_NAMES)), dtype=np.int64)
    for ci, cat in enumerate(labels.categories):
        rows = np.flatnonzero(cat_idx == ci)
        for j, prof in enumerate(cat.scores):
            scores[rows, j] = prof.draw(rng, len(rows))
    cats = np.array(labels.labels, dtype=object)[cat_idx]
    return EventLog(days, cats, scores)
