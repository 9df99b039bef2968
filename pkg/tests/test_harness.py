import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filtercast import harness, metrics, rnn
from filtercast.errors import ConvergenceError, LookAheadError, ParameterError
from filtercast.harness import HistoryView, ProtocolConfig, rolling_evaluate
from filtercast.io import write_count_series
from filtercast.sampling import binomial_thin
from filtercast.series import CountSeries
from filtercast.synthgen import InarSpec, gen_inar, gen_labeled_log, skewed_labels

FAST = ProtocolConfig(arima_bounds=(1, 1, 1), rnn=rnn.RnnSpec(hidden=4, epochs=15),
                      metric_trials=6, forecast_trials=2)


class LastValue:
    """Naive forecaster: tomorrow equals today."""

    name = "naive"

    def __init__(self):
        self.fits = 0

    def fit(self, history, **_):
        self.fits += 1

    def predict(self, history, **_):
        return history[len(history) - 1]


class Peeker(LastValue):
    def predict(self, history, **_):
        return history[len(history)]


class FlakyFit(LastValue):
    def __init__(self, fail_on):
        super().__init__()
        self.fail_on = set(fail_on)

    def fit(self, history, **_):
        self.fits += 1
        if self.fits in self.fail_on:
            raise ConvergenceError("synthetic failure")


def test_history_view_hides_future():
    v = HistoryView(np.arange(10.0), cursor=4)
    assert len(v) == 5
    np.testing.assert_array_equal(np.asarray(v), np.arange(5.0))
    assert v[-1] == 4.0
    np.testing.assert_array_equal(v[2:5], [2, 3, 4])
    np.testing.assert_array_equal(v[-3:], [2, 3, 4])
    for bad in (lambda: v[5], lambda: v[3:7], lambda: v[:6]):
        with pytest.raises(LookAheadError):
            bad()
    v.advance(6)
    assert v[6] == 6.0


def test_prediction_count_and_alignment():
    x = np.arange(50.0) ** 1.5
    res = rolling_evaluate(x, LastValue(), FAST)
    assert len(res.predictions) == 50 - FAST.initial_train_days
    np.testing.assert_array_equal(res.days, np.arange(30, 50))
    mean, std = x.mean(), x.std()
    np.testing.assert_allclose(res.actuals, (x[30:] - mean) / std)
    np.testing.assert_allclose(res.predictions, (x[29:49] - mean) / std)


def test_retrain_schedule():
    f = LastValue()
    res = rolling_evaluate(np.random.default_rng(0).normal(size=60), f, FAST)
    assert res.retrain_days == list(range(29, 59, 7))
    assert f.fits == len(res.retrain_days)


def test_look_ahead_is_fatal():
    with pytest.raises(LookAheadError):
        rolling_evaluate(np.random.default_rng(0).normal(size=40), Peeker(), FAST)


def test_skip_and_carry_counts_failures():
    f = FlakyFit(fail_on={2, 3})
    res = rolling_evaluate(np.random.default_rng(1).normal(size=60), f, FAST)
    assert res.failures == 2
    assert len(res.predictions) == 30


def test_first_fit_failure_is_raised():
    with pytest.raises(ConvergenceError):
        rolling_evaluate(np.random.default_rng(1).normal(size=60), FlakyFit(fail_on={1}), FAST)


@settings(max_examples=20)
@given(scale=st.floats(0.01, 1e4), shift=st.floats(-1e4, 1e4), seed=st.integers(0, 1000))
def test_rmse_is_affine_invariant(scale, shift, seed):
    x = np.random.default_rng(seed).poisson(20, 50).astype(float)
    a = rolling_evaluate(x, LastValue(), FAST).rmse
    b = rolling_evaluate(scale * x + shift, LastValue(), FAST).rmse
    assert b == pytest.approx(a, rel=1e-9)


def test_train_only_normalisation_uses_initial_window():
    x = np.concatenate([np.random.default_rng(2).normal(size=30), 10 + np.random.default_rng(3).normal(size=20)])
    cfg = replace(FAST, normalization="train-only")
    res = rolling_evaluate(x, LastValue(), cfg)
    np.testing.assert_allclose(res.actuals, (x[30:] - x[:30].mean()) / x[:30].std())


def test_iid_normal_arima_rmse_near_one():
    x = np.random.default_rng(42).normal(size=365)
    res = rolling_evaluate(x, "arima", ProtocolConfig())
    assert 0.9 <= res.rmse <= 1.15


def test_iid_normal_rnn_rmse_near_one():
    x = np.random.default_rng(42).normal(size=365)
    res = rolling_evaluate(x, "rnn", ProtocolConfig())
    assert 0.9 <= res.rmse <= 1.15


def test_linear_trend_arima_is_exact():
    res = rolling_evaluate(np.arange(1.0, 101.0), "arima", ProtocolConfig())
    assert len(res.predictions) == 70
    assert res.rmse <= 1e-6


def test_rnn_rolling_runs_under_guard():
    x = gen_inar(InarSpec(0.6, 20, 70, seed=1))
    res = rolling_evaluate(x, "rnn", FAST)
    assert len(res.predictions) == 40 and np.all(np.isfinite(res.predictions))


@pytest.mark.parametrize("variant", harness.VARIANTS)
def test_external_variants_run(variant):
    x = gen_inar(InarSpec(0.6, 20, 60, seed=2))
    y = binomial_thin(x, 0.5, 1, 3).series[0]
    res = rolling_evaluate(y, "rnn", FAST, external=x, variant=variant)
    assert len(res.predictions) == 30


def test_external_variant_needs_rnn_and_series():
    x = np.random.default_rng(0).normal(size=60)
    with pytest.raises(ParameterError):
        rolling_evaluate(x, "arima", FAST, external=x, variant="Full")
    with pytest.raises(ParameterError):
        rolling_evaluate(x, "rnn", FAST, variant="Full")


def test_unit_rate_row_equals_direct_metrics():
    x = gen_inar(InarSpec(0.7, 30, 120, seed=5))
    cfg = replace(FAST, models=())
    rep = harness.sweep_random(x, [0.5, 1.0], cfg, seed=3)
    row = rep.row(1.0)
    lag = metrics.best_lag(x.values)
    assert row.acf_mean == metrics.acf_at_lag(x.values, lag) and row.acf_std == 0.0
    assert row.pe_mean == metrics.permutation_entropy(x.values).normalized and row.pe_std == 0.0
    assert row.effective_rate == 1.0


@pytest.mark.parametrize("family", ["category", "threshold"])
def test_realworld_rows_monotone_in_effective_rate(family):
    log = gen_labeled_log(gen_inar(InarSpec(0.7, 20, 60, seed=8)), skewed_labels(), seed=2)
    rep = harness.sweep_realworld(log, family, config=replace(FAST, models=()))
    rates = [r.effective_rate for r in rep.rows]
    assert rates == sorted(rates) and rates[-1] == 1.0
    assert [r.scheme_param for r in rep.rows] == sorted(r.scheme_param for r in rep.rows)


def test_external_report_variant_labels():
    x = gen_inar(InarSpec(0.6, 20, 50, seed=2))
    rep = harness.external_signal_experiment(x, {1.0: x}, config=FAST)
    assert {r.variant for r in rep.rows} == {"Without", "Prediction", "Full"}
    assert all(r.trials == 1 and r.rmse_std == 0.0 for r in rep.rows)


def test_mean_std_of_identical_values_is_exact():
    assert harness._mean_std([0.1 + 0.2] * 7) == (0.1 + 0.2, 0.0)
    assert harness._mean_std([1.0, 3.0]) == (2.0, 1.0)


def test_parallel_matches_serial(tmp_path):
    x = gen_inar(InarSpec(0.7, 30, 60, seed=6))
    out = []
    for workers in (1, 2):
        rep = harness.sweep_random(x, [0.5, 1.0], replace(FAST, workers=workers), seed=9)
        path = tmp_path / f"r{workers}.csv"
        rep.to_csv(path)
        out.append(path.read_bytes())
    assert out[0] == out[1]


def test_report_columns(tmp_path):
    x = gen_inar(InarSpec(0.7, 30, 60, seed=6))
    rep = harness.sweep_random(x, [1.0], replace(FAST, models=("arima",)), seed=1)
    rep.to_csv(tmp_path / "r.csv")
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert tuple(header.split(",")) == harness.REPORT_COLUMNS
    rep.to_json(tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["rows"][0]["rmse_rnn_mean"] is None and doc["rows"][0]["flags"] == []


def test_config_round_trip():
    cfg = replace(FAST, lag_window=(2, 5))
    assert ProtocolConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_config_validation():
    with pytest.raises(ParameterError):
        ProtocolConfig(models=("prophet",))
    with pytest.raises(ParameterError):
        ProtocolConfig(normalization="minmax")


def _write_config(tmp_path, values, p, trials=3):
    write_count_series(CountSeries(np.asarray(values)), tmp_path / "x.csv")
    doc = {"input": "x.csv", "kind": "counts", "scheme": {"type": "binomial", "p": p, "trials": trials},
           "protocol": {"arima_bounds": [1, 1, 1], "forecast_trials": 1,
                        "rnn": {"hidden": 3, "epochs": 5}},
           "seed": 4, "output_dir": "out"}
    (tmp_path / "cfg.json").write_text(json.dumps(doc))
    return doc


def test_run_experiment_ok(tmp_path):
    doc = _write_config(tmp_path, gen_inar(InarSpec(0.7, 30, 50, seed=1)).values, [0.5, 1.0])
    outcome = harness.run_experiment(doc, tmp_path)
    assert outcome.exit_code == harness.EXIT_OK
    assert {f.name for f in outcome.files} == {"report.csv", "report.json", "traces.csv"}


def test_run_experiment_partial_on_degenerate_trials(tmp_path):
    values = 1 + np.arange(50) % 3
    doc = _write_config(tmp_path, values, [0.001, 1.0])
    outcome = harness.run_experiment(doc, tmp_path)
    assert outcome.failures > 0
    assert outcome.exit_code == harness.EXIT_PARTIAL
    assert outcome.report.row(1.0).failures == 0


def test_run_experiment_missing_key(tmp_path):
    with pytest.raises(ParameterError):
        harness.run_experiment({"kind": "counts"}, tmp_path)
