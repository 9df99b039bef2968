"""Predictability of filtered event count series.

Sampling schemes, predictability measures, ARIMA and LSTM forecasters, and a
rolling next-day evaluation harness.
"""
from ._jit import NUMBA_ENABLED, backend_name
from .arima import ArimaModel, ArimaOrder, fit_css, forecast_one, grid_search
from .errors import FiltercastError, LookAheadError
from .harness import (ExperimentReport, HistoryView, ProtocolConfig, external_signal_experiment,
                      rolling_evaluate, run_experiment, sweep_random, sweep_realworld)
from .metrics import acf_at_lag, best_lag, ordinal_pattern, permutation_entropy
from .rnn import RnnModel, RnnSpec
from .sampling import (BinomialThinning, CategoryStack, RiskThreshold, apply_scheme, binomial_thin,
                       category_stack_series, effective_rate, risk_threshold_filter)
from .series import CountSeries, EventLog, aggregate_daily, denormalize, znormalize
from .synthgen import InarSpec, LabelSpec, gen_inar, gen_labeled_log

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "backend_name",
    "ArimaModel", "ArimaOrder", "fit_css", "forecast_one", "grid_search",
    "FiltercastError", "LookAheadError",
    "ExperimentReport", "HistoryView", "ProtocolConfig", "external_signal_experiment",
    "rolling_evaluate", "run_experiment", "sweep_random", "sweep_realworld",
    "acf_at_lag", "best_lag", "ordinal_pattern", "permutation_entropy",
    "RnnModel", "RnnSpec",
    "BinomialThinning", "CategoryStack", "RiskThreshold", "apply_scheme", "binomial_thin",
    "category_stack_series", "effective_rate", "risk_threshold_filter",
    "CountSeries", "EventLog", "aggregate_daily", "denormalize", "znormalize",
    "InarSpec", "LabelSpec", "gen_inar", "gen_labeled_log",
]
