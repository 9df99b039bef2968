"""Stateful forecaster wrappers used by the rolling evaluation.

A forecaster is fitted on the history available at a retrain point and then
asked for one-step forecasts as the history grows.  Histories are passed as
:class:`~filtercast.harness.HistoryView` objects (or plain arrays); only
values up to the current day are ever readable through them.
"""
from __future__ import annotations

import numpy as np

from . import arima, rnn


def _values(history) -> np.ndarray:
    return np.asarray(history, dtype=np.float64)


class ArimaForecaster:
    """Grid-searched ARIMA, refitted on all history at each retrain.

    With ``warm_start`` each grid cell starts from its own parameters at the
    previous retrain.  ``freeze_order`` keeps the first selected order and
    only re-estimates its coefficients.
    """

    name = "arima"

    def __init__(self, bounds=arima.GRID_BOUNDS, freeze_order=False, warm_start=True,
                 maxiter=arima.MAX_ITER, tol=arima.TOL):
        self.bounds = tuple(bounds)
        self.freeze_order = freeze_order
        self.warm_start = warm_start
        self.maxiter = maxiter
        self.tol = tol
        self.model = None
        self._warm = {}

    def fit(self, history, **_):
        y = _values(history)
        orders = [self.model.order] if (self.freeze_order and self.model is not None) else None
        res = arima.grid_search(y, self.bounds, orders=orders, warm=self._warm if self.warm_start else None,
                                maxiter=self.maxiter, tol=self.tol, details=True)
        if self.warm_start:
            self._warm.update({o: m.params for o, m in res.models.items()})
        self.model = res.best
        return self.model

    def predict(self, history, **_):
        return arima.forecast_one(self.model, _values(history))


class RnnForecaster:
    """LSTM over the last ``spec.window`` days, optionally with external inputs.

    Each retrain starts from the seeded initialisation.  With ``warm_start``
    it continues from the previous weights for ``retrain_epochs`` (default
    ``spec.epochs``) instead, which is faster but lets the weights keep
    fitting noise across retrains.
    """

    name = "rnn"

    def __init__(self, spec: rnn.RnnSpec = rnn.RnnSpec(), n_externals=0, with_next=False,
                 wiring="step", warm_start=False, retrain_epochs=None):
        self.wiring = wiring
        head_extra = n_externals if (with_next and wiring == "head") else 0
        self.spec = rnn.with_input(spec, 1 + n_externals, head_extra)
        self.with_next = with_next
        self.warm_start = warm_start
        self.retrain_epochs = retrain_epochs
        self.model = None

    def dataset(self, history, externals=None, next_externals=None):
        return rnn.make_windows(_values(history), [_values(e) for e in externals or []],
                                self.spec.window,
                                [_values(e) for e in next_externals] if self.with_next else None,
                                self.wiring)

    def fit(self, history, externals=None, next_externals=None):
        data = self.dataset(history, externals, next_externals)
        init = self.model if (self.warm_start and self.model is not None) else None
        epochs = self.retrain_epochs if init is not None else None
        self.model = rnn.train(self.spec, data, init=init, epochs=epochs)
        return self.model

    def predict(self, history, externals=None, next_value=None):
        w = self.spec.window
        y = _values(history)[-w:]
        exts = [_values(e)[-w:] for e in externals or []]
        nxt = np.atleast_1d(next_value) if self.with_next else None
        return rnn.predict_next(self.model, y, exts, nxt, self.wiring)

    def fitted(self, history):
        """In-sample one-step predictions for days ``window .. len(history)-1``."""
        data = self.dataset(history)
        preds, _ = rnn.lstm_forward(self.model, data.inputs, data.head_features)
        return np.asarray(preds)


def make_forecaster(kind: str, config):
    if kind == "arima":
        return ArimaForecaster(config.arima_bounds, config.freeze_order, config.arima_warm_start)
    if kind == "rnn":
        return RnnForecaster(config.rnn, warm_start=config.rnn_warm_start, retrain_epochs=config.rnn_retrain_epochs)
    raise ValueError(f"unknown model kind {kind!r}")

