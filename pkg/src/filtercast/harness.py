"""Rolling next-day evaluation, sampling-rate sweeps and the external-signal experiment.

Protocol: z-normalise, train on the first ``initial_train_days``, forecast
one day ahead for every remaining day, refit on all history to date every
``retrain_every`` forecasts, and score by RMSE in normalised units.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import arima, metrics, rnn
from .errors import (DegenerateSeriesError, FiltercastError, LengthError, LookAheadError,
                     ParameterError)
from .forecasters import RnnForecaster, make_forecaster
from .sampling import (binomial_thin, category_ranking, category_stack_series, effective_rate,
                       risk_threshold_filter)
from .series import SCORE_MAX, CountSeries, EventLog, aggregate_daily

log = logging.getLogger(__name__)

MODELS = ("arima", "rnn")
VARIANTS = ("Without", "Prediction", "Full")
NORMALIZATIONS = ("whole-series", "train-only")
REPORT_COLUMNS = ("scheme_param", "effective_rate", "acf_mean", "acf_std", "pe_mean", "pe_std",
                  "rmse_arima_mean", "rmse_arima_std", "rmse_rnn_mean", "rmse_rnn_std",
                  "trials", "failures")
# 0..300 in steps of 50, plus the all-pass threshold so the sweep has an unfiltered endpoint
DEFAULT_THRESHOLDS = (*range(0, 301, 50), 4 * SCORE_MAX)
EXTERNAL_COLUMNS = ("scheme_param", "effective_rate", "variant", "rmse_mean", "rmse_std",
                    "trials", "failures")


@dataclass(frozen=True)
class ProtocolConfig:
    initial_train_days: int = 30
    retrain_every: int = 7
    normalization: str = "whole-series"
    models: tuple = MODELS
    ddof: int = 0
    arima_bounds: tuple = arima.GRID_BOUNDS
    freeze_order: bool = False
    arima_warm_start: bool = True
    rnn_warm_start: bool = False
    rnn: rnn.RnnSpec = rnn.RnnSpec()
    rnn_retrain_epochs: int | None = None
    wiring: str = "step"
    metric_trials: int = 50
    forecast_trials: int = 10
    pe_order: int = metrics.DEFAULT_PE_ORDER
    lag_window: tuple = metrics.DEFAULT_LAG_WINDOW
    workers: int = 1

    def __post_init__(self):
        if self.initial_train_days < 10:
            raise ParameterError("initial_train_days must be >= 10")
        if self.retrain_every < 1:
            raise ParameterError("retrain_every must be >= 1")
        if self.normalization not in NORMALIZATIONS:
            raise ParameterError(f"normalization must be one of {NORMALIZATIONS}")
        bad = set(self.models) - set(MODELS)
        if bad:
            raise ParameterError(f"unknown models {sorted(bad)}")
        if self.wiring not in ("step", "head"):
            raise ParameterError("wiring must be 'step' or 'head'")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "arima_bounds", tuple(self.arima_bounds))
        object.__setattr__(self, "lag_window", tuple(self.lag_window))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = list(self.models)
        d["arima_bounds"] = list(self.arima_bounds)
        d["lag_window"] = list(self.lag_window)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        d = dict(d)
        if "rnn" in d and isinstance(d["rnn"], dict):
            d["rnn"] = rnn.RnnSpec(**d["rnn"])
        for key in ("models", "arima_bounds", "lag_window"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


class HistoryView:
    """Read-only window onto a series that refuses to reveal the future.

    Only indices ``<= cursor`` are readable; ``np.asarray(view)`` yields the
    visible prefix.  Any attempt to read past the cursor raises
    :class:`LookAheadError`.
    """

    def __init__(self, values, cursor: int | None = None):
        self._values = np.asarray(values, dtype=np.float64)
        self.cursor = len(self._values) - 1 if cursor is None else int(cursor)
        self.max_index_read = -1

    def advance(self, cursor: int) -> None:
        self.cursor = int(cursor)

    def __len__(self) -> int:
        return self.cursor + 1

    def _check(self, hi: int) -> None:
        if hi > self.cursor:
            raise LookAheadError(f"read of index {hi} with only days <= {self.cursor} visible")
        self.max_index_read = max(self.max_index_read, hi)

    def __getitem__(self, idx):
        n = self.cursor + 1
        if isinstance(idx, slice):
            # an explicit stop past the cursor is a look-ahead, not a silent clip
            if idx.stop is not None and int(idx.stop) > n and (idx.step or 1) > 0:
                self._check(int(idx.stop) - 1)
            rng = range(*idx.indices(n))
            if len(rng):
                self._check(max(rng[0], rng[-1]))
            return self._values[: n][idx].copy()
        i = int(idx)
        if i < 0:
            i += n
        if i < 0:
            raise IndexError(idx)
        self._check(i)
        return float(self._values[i])

    def __array__(self, dtype=None, copy=None):
        self._check(self.cursor)
        out = self._values[: self.cursor + 1].copy()
        return out if dtype is None else out.astype(dtype)


@dataclass
class RollingResult:
    model: str
    predictions: np.ndarray
    actuals: np.ndarray
    days: np.ndarray
    rmse: float
    failures: int
    normalization: str
    retrain_days: list = field(default_factory=list)


def _norm_stats(values: np.ndarray, config: ProtocolConfig):
    ref = values if config.normalization == "whole-series" else values[: config.initial_train_days]
    mean = float(ref.mean())
    std = float(ref.std(ddof=config.ddof))
    if not std > 0:
        raise DegenerateSeriesError("series has zero variance in its normalisation window")
    return mean, std


def _raw_values(series) -> np.ndarray:
    vals = series.values if isinstance(series, CountSeries) else series
    return np.asarray(vals, dtype=np.float64)


class PredictedSignal:
    """Next-day forecasts of an external series from its own rolling LSTM.

    ``update(t)`` refits on days ``<= t``; ``training_values(t)`` gives the
    in-sample forecasts aligned with a history ending at day ``t`` (the first
    ``window`` entries, which have no forecast, are zero);
    ``next_value(t)`` is the out-of-sample forecast for day ``t + 1``.

    Results are memoised by day, so one instance can be replayed against
    several target series that share the same calendar.
    """

    def __init__(self, view: HistoryView, config: ProtocolConfig, spec: rnn.RnnSpec):
        self.view = view
        self.forecaster = RnnForecaster(spec, warm_start=config.rnn_warm_start,
                                        retrain_epochs=config.rnn_retrain_epochs)
        self._train: dict[int, np.ndarray] = {}
        self._next: dict[int, float] = {}

    @classmethod
    def for_series(cls, raw_vals, config: ProtocolConfig) -> "PredictedSignal":
        mean, std = _norm_stats(raw_vals, config)
        view = HistoryView((raw_vals - mean) / std, cursor=config.initial_train_days - 1)
        return cls(view, config, config.rnn)

    def update(self, t: int) -> None:
        if t in self._train:
            return
        self.view.advance(t)
        self.forecaster.fit(self.view)
        w = self.forecaster.spec.window
        out = np.zeros(t + 1)
        out[w:] = self.forecaster.fitted(self.view)
        self._train[t] = out

    def training_values(self, t: int) -> np.ndarray:
        return self._train[t]

    def next_value(self, t: int) -> float:
        if t not in self._next:
            self.view.advance(t)
            self._next[t] = float(self.forecaster.predict(self.view))
        return self._next[t]


def rolling_evaluate(series, model="arima", config: ProtocolConfig = ProtocolConfig(), *,
                     external=None, variant: str = "Without", view_factory=HistoryView,
                     external_signal: PredictedSignal | None = None) -> RollingResult:
    """Next-day forecasts for every day after the initial training window.

    ``model`` is ``"arima"``, ``"rnn"`` or a forecaster object with
    ``fit(history, ...)``/``predict(history, ...)``.  For the RNN, ``external``
    (a raw series aligned with ``series``) enables the external-signal
    variants: ``Full`` feeds the true next-day external value, ``Prediction``
    feeds a forecast of it, ``Without`` ignores the external series.
    """
    raw = _raw_values(series)
    T = len(raw)
    n0 = config.initial_train_days
    if variant not in VARIANTS:
        raise ParameterError(f"variant must be one of {VARIANTS}")
    kind = model if isinstance(model, str) else getattr(model, "name", type(model).__name__)
    min_len = n0 + (config.rnn.window if kind == "rnn" else 0)
    if T <= min_len:
        raise LengthError(f"series of length {T} too short for {n0} training days")
    mean, std = _norm_stats(raw, config)
    view = view_factory((raw - mean) / std, cursor=n0 - 1)

    use_ext = variant != "Without"
    if use_ext:
        if kind != "rnn":
            raise ParameterError("external-signal variants are only defined for the RNN")
        if external is None:
            raise ParameterError(f"variant {variant} needs an external series")
        ext_raw = _raw_values(external)
        if len(ext_raw) != T:
            raise LengthError("external series must align with the target")
        emean, estd = _norm_stats(ext_raw, config)
        ext_view = view_factory((ext_raw - emean) / estd, cursor=n0 - 1)
        if variant == "Prediction" and external_signal is None:
            external_signal = PredictedSignal(view_factory((ext_raw - emean) / estd, cursor=n0 - 1),
                                              config, config.rnn)

    if isinstance(model, str):
        if use_ext:
            forecaster = RnnForecaster(config.rnn, n_externals=1, with_next=True, wiring=config.wiring,
                                       warm_start=config.rnn_warm_start,
                                       retrain_epochs=config.rnn_retrain_epochs)
        else:
            forecaster = make_forecaster(model, config)
    else:
        forecaster = model

    preds, actuals, days, retrains = [], [], [], []
    failures = 0
    have_model = False
    for k, t in enumerate(range(n0 - 1, T - 1)):
        view.advance(t)
        if use_ext:
            ext_view.advance(t)
        if k % config.retrain_every == 0:
            try:
                if use_ext:
                    if variant == "Full":
                        nxt = np.asarray(ext_view)
                    else:
                        external_signal.update(t)
                        nxt = external_signal.training_values(t)
                    forecaster.fit(view, externals=[ext_view], next_externals=[nxt])
                else:
                    forecaster.fit(view)
                have_model = True
                retrains.append(t)
            except LookAheadError:
                raise
            except FiltercastError as exc:
                if not have_model:
                    raise
                failures += 1
                log.warning("refit at day %d failed (%s); reusing previous model", t, exc)
        if use_ext:
            if variant == "Full":
                # Full is the oracle bound: the true next-day external value is revealed
                ext_view.advance(t + 1)
                nxt_val = ext_view[t + 1]
                ext_view.advance(t)
            else:
                nxt_val = external_signal.next_value(t)
            pred = forecaster.predict(view, externals=[ext_view], next_value=nxt_val)
        else:
            pred = forecaster.predict(view)
        view.advance(t + 1)
        actual = view[t + 1]
        preds.append(float(pred))
        actuals.append(actual)
        days.append(t + 1)
    preds = np.array(preds)
    actuals = np.array(actuals)
    rmse = float(np.sqrt(np.mean((preds - actuals) ** 2)))
    if not math.isfinite(rmse):
        raise DegenerateSeriesError("non-finite forecast error")
    return RollingResult(kind, preds, actuals, np.array(days), rmse, failures, config.normalization, retrains)


# --- reports -------------------------------------------------------------------

@dataclass
class ReportRow:
    scheme_param: float
    effective_rate: float
    acf_mean: float
    acf_std: float
    pe_mean: float
    pe_std: float
    rmse: dict
    trials: int
    failures: int
    flags: list = field(default_factory=list)

    def as_record(self) -> dict:
        rec = {
            "scheme_param": self.scheme_param,
            "effective_rate": self.effective_rate,
            "acf_mean": self.acf_mean,
            "acf_std": self.acf_std,
            "pe_mean": self.pe_mean,
            "pe_std": self.pe_std,
        }
        for m in MODELS:
            mean_std = self.rmse.get(m)
            rec[f"rmse_{m}_mean"] = None if mean_std is None else mean_std[0]
            rec[f"rmse_{m}_std"] = None if mean_std is None else mean_std[1]
        rec["trials"] = self.trials
        rec["failures"] = self.failures
        return rec


@dataclass
class ExternalRow:
    scheme_param: float
    effective_rate: float
    variant: str
    rmse_mean: float
    rmse_std: float
    trials: int
    failures: int

    def as_record(self) -> dict:
        return {k: getattr(self, k) for k in EXTERNAL_COLUMNS}


@dataclass
class ExperimentReport:
    rows: list
    scheme: str
    normalization: str
    lag: int | None = None
    traces: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def columns(self):
        return EXTERNAL_COLUMNS if self.rows and isinstance(self.rows[0], ExternalRow) else REPORT_COLUMNS

    def records(self) -> list[dict]:
        return [r.as_record() for r in self.rows]

    def row(self, param, variant=None):
        for r in self.rows:
            if r.scheme_param == param and (variant is None or getattr(r, "variant", None) == variant):
                return r
        raise KeyError(param)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for rec in self.records():
                writer.writerow(["" if rec[c] is None else _fmt(rec[c]) for c in self.columns])

    def to_json(self, path) -> None:
        doc = {"scheme": self.scheme, "normalization": self.normalization, "lag": self.lag,
               "meta": self.meta, "rows": self.records()}
        if self.rows and hasattr(self.rows[0], "flags"):
            for rec, row in zip(doc["rows"], self.rows):
                rec["flags"] = list(row.flags)
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def traces_to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("scheme_param", "trial", "model", "day", "actual", "predicted"))
            for tr in self.traces:
                for day, a, p in zip(tr["days"], tr["actuals"], tr["predictions"]):
                    writer.writerow([_fmt(tr["scheme_param"]), tr["trial"], tr["model"], int(day),
                                     _fmt(float(a)), _fmt(float(p))])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _mean_std(values):
    if not values:
        return float("nan"), float("nan")
    arr = np.asarray(values, dtype=np.float64)
    if np.all(arr == arr[0]):
        # identical trials (p = 1, single-member schemes) report the value itself
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std())


# --- sweeps --------------------------------------------------------------------

def _forecast_job(args):
    values, kind, config, key = args
    try:
        res = rolling_evaluate(values, kind, config)
    except FiltercastError as exc:
        return key, None, f"{type(exc).__name__}: {exc}"
    return key, res, None


def _run_jobs(jobs, workers: int):
    """Run rolling evaluations, reusing results for identical inputs."""
    unique, order = {}, []
    for values, kind, config, key in jobs:
        ident = (values.tobytes(), kind)
        order.append((key, ident))
        unique.setdefault(ident, (values, kind, config, ident))
    if workers > 1 and len(unique) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = {ident: (res, err) for ident, res, err in pool.map(_forecast_job, unique.values())}
    else:
        done = {}
        for job in unique.values():
            ident, res, err = _forecast_job(job)
            done[ident] = (res, err)
    return {key: done[ident] for key, ident in order}


def _thinning_seed(seed: int, p: float) -> int:
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(round(p * 1_000_000))])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _metric_rows(samples, lag, config):
    acfs, pes, bad = [], [], 0
    for y in samples:
        try:
            acfs.append(metrics.acf_at_lag(y, lag))
            pes.append(metrics.permutation_entropy(y, config.pe_order).normalized)
        except FiltercastError:
            bad += 1
    return acfs, pes, bad


def _build_rows(params, series_by_param, rates_by_param, lag, config, label):
    jobs = []
    for p in params:
        for trial, y in enumerate(series_by_param[p][: config.forecast_trials]):
            for kind in config.models:
                jobs.append((np.asarray(y.values, dtype=np.float64), kind, config, (p, trial, kind)))
    results = _run_jobs(jobs, config.workers)
    rows, traces = [], []
    for p in params:
        samples = series_by_param[p]
        acfs, pes, bad = _metric_rows(samples, lag, config)
        acf_m, acf_s = _mean_std(acfs)
        pe_m, pe_s = _mean_std(pes)
        rmse, failures = {}, bad
        for kind in config.models:
            vals = []
            for trial in range(min(config.forecast_trials, len(samples))):
                res, err = results[(p, trial, kind)]
                if res is None:
                    failures += 1
                    log.warning("%s %s=%s trial %d failed: %s", kind, label, p, trial, err)
                    continue
                failures += res.failures
                vals.append(res.rmse)
                traces.append({"scheme_param": p, "trial": trial, "model": kind, "days": res.days,
                               "actuals": res.actuals, "predictions": res.predictions})
            rmse[kind] = _mean_std(vals)
        rate = float(np.mean(rates_by_param[p]))
        rows.append(ReportRow(p, rate, acf_m, acf_s, pe_m, pe_s, rmse, len(samples), failures))
    return rows, traces


def sweep_random(x: CountSeries, p_values, config: ProtocolConfig = ProtocolConfig(), seed: int = 0,
                 trials: int | None = None) -> ExperimentReport:
    """Binomial-thinning sweep: metrics on every trial, forecasts on the first few.

    The autocorrelation lag is chosen once on ``x`` and reused for every
    thinned series.
    """
    ps = sorted(float(p) for p in p_values)
    if not ps or ps[0] <= 0 or ps[-1] > 1:
        raise ParameterError("p values must lie in (0, 1]")
    n_trials = config.metric_trials if trials is None else int(trials)
    lag = metrics.best_lag(x.values, config.lag_window)
    series_by_p, rates = {}, {}
    for p in ps:
        ts = binomial_thin(x, p, n_trials, _thinning_seed(seed, p))
        series_by_p[p] = list(ts.series)
        rates[p] = [effective_rate(y, x) for y in ts.series]
    rows, traces = _build_rows(ps, series_by_p, rates, lag, config, "p")
    _flag_model_order(rows)
    return ExperimentReport(rows, "binomial", config.normalization, lag, traces,
                            {"seed": seed, "trials": n_trials, "forecast_trials": config.forecast_trials})


def _flag_model_order(rows, margin: float = 0.05):
    for row in rows:
        a, r = row.rmse.get("arima"), row.rmse.get("rnn")
        if a and r and math.isfinite(a[0]) and math.isfinite(r[0]) and r[0] > a[0] + margin:
            row.flags.append("rnn_worse_than_arima")


def realworld_series(log_: EventLog, family: str, params, day_range=None) -> dict:
    if family == "threshold":
        return {int(t): risk_threshold_filter(log_, int(t), day_range) for t in params}
    if family == "category":
        return {int(k): category_stack_series(log_, int(k), day_range) for k in params}
    raise ParameterError(f"unknown real-world scheme family {family!r}")


def sweep_realworld(log_: EventLog, family: str, params=None, config: ProtocolConfig = ProtocolConfig(),
                    day_range=None) -> ExperimentReport:
    """One deterministic row per risk threshold or category-stack size."""
    day_range = log_.day_span() if day_range is None else day_range
    if params is None:
        params = DEFAULT_THRESHOLDS if family == "threshold" else range(1, len(category_ranking(log_)) + 1)
    params = sorted(int(v) for v in params)
    truth = aggregate_daily(log_, day_range)
    lag = metrics.best_lag(truth.values, config.lag_window)
    by_param = realworld_series(log_, family, params, day_range)
    rates = {k: [effective_rate(s, truth)] for k, s in by_param.items()}
    series_by = {k: [s] for k, s in by_param.items()}
    rows, traces = _build_rows(params, series_by, rates, lag, config, family)
    _flag_model_order(rows)
    return ExperimentReport(rows, family, config.normalization, lag, traces, {})


def external_signal_experiment(raw: CountSeries, observed: dict, variants=VARIANTS,
                               config: ProtocolConfig = ProtocolConfig(), seeds=None) -> ExperimentReport:
    """RNN forecasts of each observed series with the raw series as external signal.

    ``observed`` maps a sampling parameter to its filtered series.  Each seed
    retrains every variant with that RNN seed; the raw-series forecaster used
    by the ``Prediction`` variant is shared across sampling levels.
    """
    variants = tuple(variants)
    bad = set(variants) - set(VARIANTS)
    if bad:
        raise ParameterError(f"unknown variants {sorted(bad)}")
    seeds = [config.rnn.seed] if seeds is None else list(seeds)
    raw_vals = _raw_values(raw)
    rows = []
    results = {}
    for seed in seeds:
        cfg = replace(config, rnn=replace(config.rnn, seed=int(seed)))
        signal = PredictedSignal.for_series(raw_vals, cfg) if "Prediction" in variants else None
        for param in sorted(observed):
            y = _raw_values(observed[param])
            for variant in variants:
                sig = signal if variant == "Prediction" else None
                try:
                    res = rolling_evaluate(y, "rnn", cfg, external=raw_vals, variant=variant,
                                           external_signal=sig)
                    results.setdefault((param, variant), []).append(res.rmse)
                except FiltercastError as exc:
                    log.warning("external %s at %s seed %s failed: %s", variant, param, seed, exc)
                    results.setdefault((param, variant), []).append(None)
    for param in sorted(observed):
        rate = effective_rate(observed[param], raw)
        for variant in variants:
            vals = results[(param, variant)]
            ok = [v for v in vals if v is not None]
            m, s = _mean_std(ok)
            rows.append(ExternalRow(param, rate, variant, m, s, len(vals), len(vals) - len(ok)))
    return ExperimentReport(rows, "external", config.normalization, None, [], {"seeds": seeds})



# --- config-driven runner ------------------------------------------------------

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


@dataclass
class ExperimentOutcome:
    report: ExperimentReport
    external: ExperimentReport | None
    files: list

    @property
    def failures(self) -> int:
        rows = list(self.report.rows) + (list(self.external.rows) if self.external else [])
        return sum(r.failures for r in rows)

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failures else EXIT_OK


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def run_experiment(doc: dict, base_dir=".") -> ExperimentOutcome:
    """Run the sweep described by a config document and write its reports.

    Keys: ``input`` (path, relative to ``base_dir``), ``kind`` (``counts`` or
    ``events``), ``scheme`` (``{"type": "binomial", "p": [...], "trials": n}``,
    ``{"type": "threshold", "t": [...]}`` or ``{"type": "category", "k": [...]}``),
    ``protocol`` (:class:`ProtocolConfig` fields), ``models``, optional
    ``external`` (``{"variants": [...], "seeds": [...]}``), ``seed`` and
    ``output_dir``.
    """
    from .io import read_count_series, read_event_log

    base = Path(base_dir)
    try:
        src = base / doc["input"]
        kind = doc.get("kind", "counts")
        scheme = dict(doc["scheme"])
    except KeyError as exc:
        raise ParameterError(f"config is missing {exc}") from None
    proto = dict(doc.get("protocol", {}))
    if "models" in doc:
        proto["models"] = doc["models"]
    config = ProtocolConfig.from_dict(proto)
    seed = int(doc.get("seed", 0))
    out_dir = base / doc.get("output_dir", "results")

    if kind == "counts":
        log_, truth = None, read_count_series(src)
    elif kind == "events":
        log_ = read_event_log(src)
        truth = aggregate_daily(log_)
    else:
        raise ParameterError(f"kind must be 'counts' or 'events', got {kind!r}")

    stype = scheme.get("type")
    if stype == "binomial":
        p_values = _as_list(scheme.get("p", [round(0.1 * i, 1) for i in range(1, 11)]))
        report = sweep_random(truth, p_values, config, seed, scheme.get("trials"))
        observed = {p: binomial_thin(truth, p, 1, _thinning_seed(seed, p)).series[0]
                    for p in sorted(float(v) for v in p_values)}
    elif stype in ("threshold", "category"):
        if log_ is None:
            raise ParameterError(f"{stype} sampling needs an event log input")
        params = scheme.get("t" if stype == "threshold" else "k")
        params = None if params is None else _as_list(params)
        report = sweep_realworld(log_, stype, params, config)
        observed = realworld_series(log_, stype, [r.scheme_param for r in report.rows])
    else:
        raise ParameterError(f"unknown scheme type {stype!r}")
    report.meta.update({"config": config.to_dict(), "input": str(doc["input"])})

    external = None
    if doc.get("external"):
        ext = dict(doc["external"])
        external = external_signal_experiment(truth, observed, ext.get("variants", VARIANTS),
                                              config, ext.get("seeds"))

    out_dir.mkdir(parents=True, exist_ok=True)
    files = [out_dir / "report.csv", out_dir / "report.json", out_dir / "traces.csv"]
    report.to_csv(files[0])
    report.to_json(files[1])
    report.traces_to_csv(files[2])
    if external is not None:
        files += [out_dir / "external.csv", out_dir / "external.json"]
        external.to_csv(files[3])
        external.to_json(files[4])
    return ExperimentOutcome(report, external, files)
