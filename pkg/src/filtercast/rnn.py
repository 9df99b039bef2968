"""Single-layer LSTM with a linear head, trained by full-batch BPTT and Adam.

Parameters live in one flat vector laid out as

    W  (input_dim + hidden, 4 * hidden)   gate blocks ordered input, forget, output, candidate
    b  (4 * hidden,)
    v  (hidden + head_extra,)             linear head
    c  (1,)                               head bias
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._jit import jit
from .errors import AlignmentError, DivergenceError, LengthError, ParameterError, ShapeError

GATES = ("input", "forget", "output", "candidate")


@dataclass(frozen=True)
class RnnSpec:
    input_dim: int = 1
    hidden: int = 32
    window: int = 7
    epochs: int = 200
    lr: float = 1e-2  # full batch means one Adam step per epoch
    seed: int = 0
    patience: int = 20
    holdout: float = 0.1
    head_extra: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden < 1 or self.window < 1:
            raise ParameterError("input_dim, hidden and window must be >= 1")
        if not self.lr > 0:
            raise ParameterError("learning rate must be positive")
        if self.epochs < 1 or self.patience < 1:
            raise ParameterError("epochs and patience must be >= 1")
        if not 0 <= self.holdout < 1:
            raise ParameterError("holdout fraction must lie in [0, 1)")
        if self.head_extra < 0:
            raise ParameterError("head_extra must be >= 0")

    @property
    def n_params(self) -> int:
        return n_params(self.input_dim, self.hidden, self.head_extra)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def n_params(input_dim: int, hidden: int, head_extra: int = 0) -> int:
    return (input_dim + hidden) * 4 * hidden + 4 * hidden + hidden + head_extra + 1


@dataclass(frozen=True)
class WindowDataset:
    inputs: np.ndarray       # (n, steps, input_dim)
    targets: np.ndarray      # (n,)
    head_features: np.ndarray  # (n, head_extra)

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[2]

    @property
    def steps(self) -> int:
        return self.inputs.shape[1]

    def split(self, holdout: float):
        """Chronological split: the last ``holdout`` fraction is held out."""
        n = len(self)
        n_val = int(n * holdout)
        if holdout > 0 and n_val == 0 and n >= 2:
            n_val = 1
        cut = n - n_val
        return (self.inputs[:cut], self.targets[:cut], self.head_features[:cut],
                self.inputs[cut:], self.targets[cut:], self.head_features[cut:])


def make_windows(target, externals=None, window: int = 7, next_externals=None,
                 wiring: str = "step") -> WindowDataset:
    """Sliding windows of ``window`` days predicting the following day.

    Each sample's rows are days ``t-window+1 .. t`` with columns
    ``[target, *externals]``; the label is ``target[t+1]``.  When
    ``next_externals`` is given (one array per external, aligned so that
    entry ``t+1`` holds the value supplied for day ``t+1``), it is injected
    either as an extra final time step with the target column zeroed
    (``wiring="step"``) or as extra inputs to the linear head (``"head"``).
    """
    y = np.asarray(target, dtype=np.float64)
    exts = [np.asarray(e, dtype=np.float64) for e in (externals or [])]
    nxt = [np.asarray(e, dtype=np.float64) for e in (next_externals or [])]
    T = len(y)
    if any(len(e) != T for e in exts + nxt):
        raise AlignmentError("target and external series must have equal length")
    if nxt and len(nxt) != len(exts):
        raise AlignmentError("need one next-day value series per external")
    if wiring not in ("step", "head"):
        raise ParameterError(f"unknown wiring {wiring!r}")
    window = int(window)
    if window < 1:
        raise ParameterError("window must be >= 1")
    n = T - window
    if n < 1:
        raise LengthError(f"series of length {T} yields no windows of size {window}")
    cols = np.column_stack([y, *exts]) if exts else y[:, None]
    idx = np.arange(n)[:, None] + np.arange(window)[None, :]
    inputs = cols[idx]
    targets = y[window:].copy()
    head = np.zeros((n, 0))
    if nxt:
        extra = np.column_stack([e[window:] for e in nxt])
        if wiring == "step":
            step = np.zeros((n, 1, cols.shape[1]))
            step[:, 0, 1:] = extra
            inputs = np.concatenate([inputs, step], axis=1)
        else:
            head = extra
    return WindowDataset(np.ascontiguousarray(inputs), targets, np.ascontiguousarray(head))


# --- kernels -----------------------------------------------------------------

@jit
def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@jit
def _unpack(theta, input_dim, hidden, head_extra):
    nz = input_dim + hidden
    g = 4 * hidden
    W = theta[: nz * g].reshape((nz, g))
    b = theta[nz * g: nz * g + g]
    off = nz * g + g
    v = theta[off: off + hidden + head_extra]
    c = theta[off + hidden + head_extra]
    return W, b, v, c


@jit
def _forward(theta, X, F, hidden):
    """Run the batch; returns predictions and the caches needed for BPTT."""
    B, L, I = X.shape
    E = F.shape[1]
    W, b, v, c = _unpack(theta, I, hidden, E)
    H = hidden
    Z = np.zeros((L, B, I + H))
    G = np.empty((L, B, 4 * H))
    C = np.zeros((L + 1, B, H))
    TC = np.empty((L, B, H))
    h = np.zeros((B, H))
    for t in range(L):
        Zt = Z[t]
        Zt[:, :I] = X[:, t, :]
        Zt[:, I:] = h
        A = np.dot(Zt, W) + b
        Gt = G[t]
        Gt[:, : 3 * H] = _sigmoid(A[:, : 3 * H])
        Gt[:, 3 * H:] = np.tanh(A[:, 3 * H:])
        C[t + 1] = Gt[:, H: 2 * H] * C[t] + Gt[:, :H] * Gt[:, 3 * H:]
        TC[t] = np.tanh(C[t + 1])
        h = Gt[:, 2 * H: 3 * H] * TC[t]
    pred = np.dot(h, v[:H]) + c
    if E > 0:
        pred = pred + np.dot(F, v[H:])
    return pred, h, Z, G, C, TC


@jit
def _loss_grad(theta, X, y, F, hidden):
    """Mean squared error and its gradient with respect to ``theta``."""
    B, L, I = X.shape
    E = F.shape[1]
    H = hidden
    pred, h, Z, G, C, TC = _forward(theta, X, F, hidden)
    W, b, v, c = _unpack(theta, I, hidden, E)
    resid = pred - y
    loss = np.mean(resid * resid)
    grad = np.zeros_like(theta)
    dW, db, dv, _ = _unpack(grad, I, hidden, E)
    dpred = 2.0 * resid / B
    dv[:H] = np.dot(dpred, h)
    if E > 0:
        dv[H:] = np.dot(dpred, F)
    grad[grad.shape[0] - 1] = np.sum(dpred)
    dh = np.outer(dpred, v[:H])
    dc = np.zeros((B, H))
    dA = np.empty((B, 4 * H))
    Wh_T = np.ascontiguousarray(W[I:, :].T)
    for t in range(L - 1, -1, -1):
        Gt = G[t]
        gi = Gt[:, :H]
        gf = Gt[:, H: 2 * H]
        go = Gt[:, 2 * H: 3 * H]
        gg = Gt[:, 3 * H:]
        tc = TC[t]
        dc = dc + dh * go * (1.0 - tc * tc)
        dA[:, :H] = dc * gg * gi * (1.0 - gi)
        dA[:, H: 2 * H] = dc * C[t] * gf * (1.0 - gf)
        dA[:, 2 * H: 3 * H] = dh * tc * go * (1.0 - go)
        dA[:, 3 * H:] = dc * gi * (1.0 - gg * gg)
        dW += np.dot(np.ascontiguousarray(Z[t].T), dA)
        db += dA.sum(axis=0)
        dh = np.dot(dA, Wh_T)
        dc = dc * gf
    return loss, grad


@jit
def _mse(theta, X, y, F, hidden):
    pred = _forward(theta, X, F, hidden)[0]
    r = pred - y
    return np.mean(r * r)


@jit
def _train_loop(theta, X, y, F, Xv, yv, Fv, hidden, epochs, lr, patience):
    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8
    m = np.zeros_like(theta)
    s = np.zeros_like(theta)
    train_trace = np.full(epochs, np.nan)
    val_trace = np.full(epochs, np.nan)
    has_val = yv.shape[0] > 0
    best = theta.copy()
    best_val = np.inf
    best_epoch = -1
    since = 0
    b1t = 1.0
    b2t = 1.0
    status = 0
    for ep in range(epochs):
        loss, grad = _loss_grad(theta, X, y, F, hidden)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            status = 1
            break
        train_trace[ep] = loss
        monitor = _mse(theta, Xv, yv, Fv, hidden) if has_val else loss
        val_trace[ep] = monitor
        if monitor < best_val:
            best_val = monitor
            best[:] = theta
            best_epoch = ep
            since = 0
        else:
            since += 1
            if since >= patience:
                break
        b1t *= beta1
        b2t *= beta2
        m = beta1 * m + (1.0 - beta1) * grad
        s = beta2 * s + (1.0 - beta2) * grad * grad
        theta = theta - lr * (m / (1.0 - b1t)) / (np.sqrt(s / (1.0 - b2t)) + eps)
    if best_epoch < 0:
        best[:] = theta
    return best, train_trace, val_trace, best_epoch, status


# --- public API ----------------------------------------------------------------

def init_params(spec: RnnSpec) -> np.ndarray:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    I, H, E = spec.input_dim, spec.hidden, spec.head_extra
    gate_bound = 1.0 / math.sqrt(I + H)
    head_bound = 1.0 / math.sqrt(H + E)
    n_gate = (I + H) * 4 * H + 4 * H
    return np.concatenate([
        rng.uniform(-gate_bound, gate_bound, n_gate),
        rng.uniform(-head_bound, head_bound, H + E + 1),
    ])


@dataclass(frozen=True, eq=False)
class RnnModel:
    spec: RnnSpec
    theta: np.ndarray
    train_loss: tuple = ()
    val_loss: tuple = ()
    best_epoch: int = -1

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64)
        if theta.shape != (self.spec.n_params,):
            raise ShapeError(f"expected {self.spec.n_params} parameters, got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ParameterError("model parameters must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    def weights(self) -> dict:
        """Per-gate matrices (hidden x (input_dim + hidden)) and biases, plus the head."""
        I, H, E = self.spec.input_dim, self.spec.hidden, self.spec.head_extra
        W, b, v, c = _unpack(np.array(self.theta), I, H, E)
        out = {}
        for k, name in enumerate(GATES):
            out[f"W_{name}"] = W[:, k * H:(k + 1) * H].T.copy()
            out[f"b_{name}"] = b[k * H:(k + 1) * H].copy()
        out["w_out"] = v.copy()
        out["b_out"] = np.array([c])
        return out

    @classmethod
    def from_weights(cls, spec: RnnSpec, weights: dict, **kw) -> "RnnModel":
        I, H = spec.input_dim, spec.hidden
        theta = np.zeros(spec.n_params)
        W, b, v, _ = _unpack(theta, I, H, spec.head_extra)
        for k, name in enumerate(GATES):
            Wg = np.asarray(weights[f"W_{name}"], dtype=np.float64)
            if Wg.shape != (H, I + H):
                raise ShapeError(f"W_{name} must have shape {(H, I + H)}, got {Wg.shape}")
            W[:, k * H:(k + 1) * H] = Wg.T
            b[k * H:(k + 1) * H] = np.asarray(weights[f"b_{name}"], dtype=np.float64).reshape(H)
        v[:] = np.asarray(weights["w_out"], dtype=np.float64).reshape(-1)
        theta[-1] = float(np.asarray(weights["b_out"]).reshape(-1)[0])
        return cls(spec, theta, **kw)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "weights": {k: {"shape": list(a.shape), "data": a.reshape(-1).tolist()}
                        for k, a in self.weights().items()},
            "train_loss": [float(x) for x in self.train_loss],
            "best_epoch": self.best_epoch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RnnModel":
        spec = RnnSpec(**d["spec"])
        weights = {k: np.asarray(w["data"], dtype=np.float64).reshape(w["shape"])
                   for k, w in d["weights"].items()}
        return cls.from_weights(spec, weights, train_loss=tuple(d.get("train_loss", ())),
                                best_epoch=int(d.get("best_epoch", -1)))


def _check_inputs(spec, inputs, features):
    X = np.ascontiguousarray(inputs, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[2] != spec.input_dim:
        raise ShapeError(f"inputs must have shape (n, steps, {spec.input_dim}), got {X.shape}")
    F = np.zeros((X.shape[0], 0)) if features is None else np.ascontiguousarray(features, dtype=np.float64)
    if F.ndim == 1:
        F = F[None]
    if F.shape != (X.shape[0], spec.head_extra):
        raise ShapeError(f"head features must have shape {(X.shape[0], spec.head_extra)}, got {F.shape}")
    return X, F


def lstm_forward(model: RnnModel, inputs, head_features=None):
    """Predictions for one window (``(steps, input_dim)``) or a batch of them.

    Returns ``(prediction, cache)`` where ``cache`` holds final hidden state
    and per-step gate activations, cell states and squashed cell states.
    """
    single = np.ndim(inputs) == 2
    X, F = _check_inputs(model.spec, inputs, head_features)
    pred, h, Z, G, C, TC = _forward(np.array(model.theta), X, F, model.spec.hidden)
    cache = {"hidden": h, "gates": G, "cells": C, "tanh_cells": TC}
    return (float(pred[0]) if single else pred), cache


def loss_and_grad(spec: RnnSpec, theta, data: WindowDataset):
    X, F = _check_inputs(spec, data.inputs, data.head_features)
    return _loss_grad(np.ascontiguousarray(theta, dtype=np.float64), X,
                      np.ascontiguousarray(data.targets, dtype=np.float64), F, spec.hidden)


def train(spec: RnnSpec, data: WindowDataset, init: RnnModel | None = None,
          epochs: int | None = None) -> RnnModel:
    """Fit by full-batch Adam with early stopping on the chronologically last windows.

    ``init`` continues from an existing model's weights (same architecture)
    instead of a fresh seeded initialisation; ``epochs`` overrides the budget.
    """
    if len(data) == 0:
        raise LengthError("cannot train on an empty dataset")
    if data.input_dim != spec.input_dim or data.head_features.shape[1] != spec.head_extra:
        raise ShapeError("dataset shape does not match the spec")
    theta = np.array(init.theta) if init is not None else init_params(spec)
    if init is not None and init.spec.n_params != spec.n_params:
        raise ShapeError("warm-start model has a different architecture")
    X, y, F, Xv, yv, Fv = data.split(spec.holdout)
    n_ep = int(epochs if epochs is not None else spec.epochs)
    best, tr, va, best_epoch, status = _train_loop(
        theta, np.ascontiguousarray(X), np.ascontiguousarray(y), np.ascontiguousarray(F),
        np.ascontiguousarray(Xv), np.ascontiguousarray(yv), np.ascontiguousarray(Fv),
        spec.hidden, n_ep, float(spec.lr), spec.patience)
    if status != 0:
        raise DivergenceError(f"non-finite training loss (lr={spec.lr}); reduce the learning rate")
    done = ~np.isnan(tr)
    return RnnModel(spec, best, tuple(tr[done].tolist()), tuple(va[done].tolist()), int(best_epoch))


def predict_next(model: RnnModel, recent_target, recent_externals=None, next_externals=None,
                 wiring: str = "step") -> float:
    """Normalised next-day prediction from the last ``window`` days."""
    w = model.spec.window
    y = np.asarray(recent_target, dtype=np.float64)
    if len(y) < w:
        raise LengthError(f"need {w} recent values, got {len(y)}")
    exts = [np.asarray(e, dtype=np.float64)[-w:] for e in (recent_externals or [])]
    if any(len(e) < w for e in exts):
        raise LengthError(f"need {w} recent external values")
    rows = np.column_stack([y[-w:], *exts]) if exts else y[-w:, None]
    feats = None
    if next_externals is not None:
        nxt = np.asarray(next_externals, dtype=np.float64).reshape(-1)
        if wiring == "step":
            extra = np.zeros((1, rows.shape[1]))
            extra[0, 1:] = nxt
            rows = np.vstack([rows, extra])
        else:
            feats = nxt[None, :]
    pred, _ = lstm_forward(model, rows, feats)
    return pred


def with_input(spec: RnnSpec, input_dim: int, head_extra: int = 0) -> RnnSpec:
    return replace(spec, input_dim=input_dim, head_extra=head_extra)
