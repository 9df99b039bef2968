"""Shared checks used by both the unit and the acceptance suites."""
import numpy as np

from filtercast import rnn

import oracles


def param_blocks(I, H, E=0):
    n_w = (I + H) * 4 * H
    return {"W": slice(0, n_w), "b": slice(n_w, n_w + 4 * H),
            "v": slice(n_w + 4 * H, n_w + 5 * H + E), "c": slice(n_w + 5 * H + E, n_w + 5 * H + E + 1)}


def gradient_error(seed, hidden=3):
    rng = np.random.default_rng(seed)
    I = int(rng.integers(1, 4))
    E = int(rng.integers(0, 3))
    steps = int(rng.integers(1, 6))
    n = int(rng.integers(1, 6))
    spec = rnn.RnnSpec(input_dim=I, hidden=hidden, head_extra=E, seed=seed)
    theta = rng.normal(0, 0.7, spec.n_params)
    data = rnn.WindowDataset(rng.normal(size=(n, steps, I)), rng.normal(size=n), rng.normal(size=(n, E)))
    _, analytic = rnn.loss_and_grad(spec, theta, data)
    numeric = oracles.central_difference(lambda th: rnn.loss_and_grad(spec, th, data)[0], theta)
    return oracles.tensorwise_relative_error(analytic, numeric, param_blocks(I, hidden, E))


def noiseless_ar1_dataset(n=400, phi=0.7, window=7, seed=0):
    # many short trajectories of the map y -> phi * y from random starting points
    y0 = np.random.default_rng(seed).uniform(-2, 2, n)
    X = (y0[:, None] * phi ** np.arange(window)[None, :])[:, :, None]
    return rnn.WindowDataset(X, phi * X[:, -1, 0], np.zeros((n, 0)))


def noiseless_ar1_heldout_mse():
    data = noiseless_ar1_dataset()
    model = rnn.train(rnn.RnnSpec(), data)
    *_, Xv, yv, Fv = data.split(model.spec.holdout)
    pred, _ = rnn.lstm_forward(model, Xv, Fv)
    return float(np.mean((pred - yv) ** 2))
