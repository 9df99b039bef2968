"""Model-free predictability measures: lagged autocorrelation and permutation entropy."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._jit import choose
from .errors import DegenerateSeriesError, LengthError, ParameterError
from .series import CountSeries, NormalizedSeries

DEFAULT_LAG_WINDOW = (1, 7)
DEFAULT_PE_ORDER = 3
MAX_PE_ORDER = 7


def _as_float(s) -> np.ndarray:
    if isinstance(s, (CountSeries, NormalizedSeries)):
        s = s.values
    arr = np.asarray(s, dtype=np.float64)
    if arr.ndim != 1:
        raise ParameterError("expected a one-dimensional series")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("series contains non-finite values")
    return arr


@dataclass(frozen=True)
class AcfResult:
    lag: int
    value: float


@dataclass(frozen=True)
class PermutationEntropyResult:
    order: int
    entropy_nats: float
    normalized: float
    motif_histogram: dict = field(compare=False)

    @property
    def n_windows(self) -> int:
        return sum(self.motif_histogram.values())


def acf_at_lag(s, lag: int) -> float:
    """Pearson correlation between ``s[:-lag]`` and ``s[lag:]``."""
    x = _as_float(s)
    lag = int(lag)
    if lag < 1:
        raise ParameterError("lag must be >= 1")
    if len(x) < lag + 2:
        raise LengthError(f"series of length {len(x)} too short for lag {lag}")
    head, tail = x[:-lag], x[lag:]
    a = head - head.mean()
    b = tail - tail.mean()
    saa, sbb = float(a @ a), float(b @ b)
    # exact-zero check plus a relative guard against roundoff-only spread
    if saa <= 1e-24 * max(1.0, float(head @ head)) or sbb <= 1e-24 * max(1.0, float(tail @ tail)):
        raise DegenerateSeriesError(f"zero-variance slice at lag {lag}")
    r = float(a @ b) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def acf_profile(s, window=DEFAULT_LAG_WINDOW) -> dict[int, float]:
    lo, hi = int(window[0]), int(window[1])
    if lo < 1 or hi < lo:
        raise ParameterError(f"bad lag window {window}")
    return {lag: acf_at_lag(s, lag) for lag in range(lo, hi + 1)}


def best_lag(ground_truth, window=DEFAULT_LAG_WINDOW) -> int:
    """Lag in ``window`` with the highest autocorrelation (smallest lag on ties).

    The lag is meant to be chosen once on the unfiltered series and then
    reused for every filtered version of it.
    """
    prof = acf_profile(ground_truth, window)
    best = max(prof.values())
    return min(lag for lag, v in prof.items() if v == best)


def ordinal_pattern(window) -> tuple[int, ...]:
    """Indices of ``window`` listed in ascending value order; ties keep index order.

    ``(3, 6, 1)`` gives ``(2, 0, 1)``: the third value is smallest, then the
    first, then the second.
    """
    w = np.asarray(window, dtype=np.float64)
    return tuple(int(i) for i in np.argsort(w, kind="stable"))


def _pattern_codes_loop(x, d):
    n = x.shape[0] - d + 1
    codes = np.empty(n, dtype=np.int64)
    idx = np.empty(d, dtype=np.int64)
    for s in range(n):
        # stable insertion sort of window indices by value
        for j in range(d):
            idx[j] = j
        for j in range(1, d):
            cur = idx[j]
            v = x[s + cur]
            k = j - 1
            while k >= 0 and x[s + idx[k]] > v:
                idx[k + 1] = idx[k]
                k -= 1
            idx[k + 1] = cur
        code = 0
        for j in range(d):
            code = code * d + idx[j]
        codes[s] = code
    return codes


def _pattern_codes_numpy(x, d):
    windows = np.lib.stride_tricks.sliding_window_view(x, d)
    perms = np.argsort(windows, axis=1, kind="stable")
    weights = d ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return perms.astype(np.int64) @ weights


pattern_codes = choose(_pattern_codes_loop, _pattern_codes_numpy)


def _decode(code: int, d: int) -> tuple[int, ...]:
    digits = []
    for _ in range(d):
        code, r = divmod(code, d)
        digits.append(r)
    return tuple(reversed(digits))


def permutation_entropy(s, d: int = DEFAULT_PE_ORDER) -> PermutationEntropyResult:
    """Shannon entropy (nats) of the ordinal-pattern distribution, delay 1.

    ``normalized`` divides by ``ln(d!)``.  Ties are ranked by position, so
    flat stretches of count data map to the identity pattern.
    """
    x = _as_float(s)
    d = int(d)
    if not 2 <= d <= MAX_PE_ORDER:
        raise ParameterError(f"embedding order must lie in [2, {MAX_PE_ORDER}], got {d}")
    if len(x) < d + 1:
        raise LengthError(f"series of length {len(x)} too short for order {d}")
    if len(x) < 5 * math.factorial(d):
        warnings.warn(f"permutation entropy with order {d} on only {len(x)} points is poorly sampled",
                      RuntimeWarning, stacklevel=2)
    codes = pattern_codes(np.ascontiguousarray(x), d)
    uniq, counts = np.unique(codes, return_counts=True)
    q = counts / counts.sum()
    h = float(-(q * np.log(q)).sum())
    h = h if h > 0.0 else 0.0  # a single pattern sums to -0.0
    hmax = math.log(math.factorial(d))
    hist = {_decode(int(c), d): int(n) for c, n in zip(uniq, counts)}
    return PermutationEntropyResult(d, h, min(1.0, h / hmax), hist)
