"""ARIMA(p, d, q) fitted by conditional sum of squares, with AIC order search.

The differenced series ``w`` follows

    w_t - mu = sum_i ar_i (w_{t-i} - mu) + e_t + sum_j ma_j e_{t-j}

with residuals ``e_t`` fixed at zero for the first ``max(p, q)`` steps.
Parameters minimise the sum of the remaining squared residuals.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_toeplitz
from scipy.signal import lfilter

from ._jit import choose, jit
from .errors import ConvergenceError, GridSearchError, LengthError, ParameterError

MAX_ITER = 500
TOL = 1e-8
GRID_BOUNDS = (5, 2, 5)
# penalty starts a hair inside the unit circle so the optimum stays strictly stationary
ROOT_LIMIT = 0.999
PENALTY_WEIGHT = 1e4
COLD_STEP = 0.1
WARM_STEP = 0.01
_BIG = 1e300
_SIGMA2_FLOOR = 1e-300


class ShortSeriesWarning(RuntimeWarning):
    """Fewer than ten observations per parameter."""


@dataclass(frozen=True, order=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ParameterError(f"ARIMA orders must be non-negative, got {tuple(self)}")

    def __iter__(self):
        return iter((self.p, self.d, self.q))

    def __str__(self):
        return f"({self.p},{self.d},{self.q})"

    @property
    def n_params(self) -> int:
        return self.p + self.q + 1


@dataclass(frozen=True)
class ArimaModel:
    order: ArimaOrder
    intercept: float
    ar: tuple
    ma: tuple
    sigma2: float
    aic: float
    train_len: int
    converged: bool = field(default=True, compare=False)
    iterations: int = field(default=0, compare=False)

    @property
    def params(self) -> np.ndarray:
        return np.array([self.intercept, *self.ar, *self.ma], dtype=np.float64)

    def to_dict(self) -> dict:
        return {
            "order": list(self.order),
            "intercept": self.intercept,
            "ar": list(self.ar),
            "ma": list(self.ma),
            "sigma2": self.sigma2,
            "aic": self.aic,
            "train_len": self.train_len,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArimaModel":
        order = ArimaOrder(*(int(v) for v in d["order"]))
        ar = tuple(float(v) for v in d["ar"])
        ma = tuple(float(v) for v in d["ma"])
        if len(ar) != order.p or len(ma) != order.q:
            raise ParameterError("coefficient count does not match order")
        return cls(order, float(d["intercept"]), ar, ma, float(d["sigma2"]), float(d["aic"]),
                   int(d["train_len"]))

    def forecast(self, history) -> float:
        return forecast_one(self, history)


def difference(s, d: int) -> np.ndarray:
    x = np.asarray(s, dtype=np.float64)
    d = int(d)
    if d < 0:
        raise ParameterError("difference order must be >= 0")
    if len(x) <= d:
        raise LengthError(f"cannot difference {len(x)} values {d} time(s)")
    return np.diff(x, n=d) if d else x.copy()


def undifference(forecast_diff: float, history, d: int) -> float:
    """Turn a one-step forecast of the d-th difference into a level forecast."""
    d = int(d)
    if d == 0:
        return float(forecast_diff)
    h = np.asarray(history, dtype=np.float64)
    if len(h) < d:
        raise LengthError(f"need {d} past values to undo {d} difference(s)")
    level = float(forecast_diff)
    for k in range(1, d + 1):
        level += (-1) ** (k + 1) * math.comb(d, k) * h[-k]
    return level


# --- kernels -----------------------------------------------------------------

def _residuals_loop(w, mu, ar, ma):
    n = w.shape[0]
    p = ar.shape[0]
    q = ma.shape[0]
    m = max(p, q)
    e = np.zeros(n)
    for t in range(m, n):
        acc = w[t] - mu
        for i in range(p):
            acc -= ar[i] * (w[t - 1 - i] - mu)
        for j in range(q):
            acc -= ma[j] * e[t - 1 - j]
        e[t] = acc
    return e


def _residuals_numpy(w, mu, ar, ma):
    n = w.shape[0]
    p = ar.shape[0]
    q = ma.shape[0]
    m = max(p, q)
    e = np.zeros(n)
    if n <= m:
        return e
    u = w - mu
    v = u[m:].copy()
    for i in range(p):
        v -= ar[i] * u[m - 1 - i:n - 1 - i]
    if q:
        with np.errstate(over="ignore", invalid="ignore"):
            v = lfilter(np.array([1.0]), np.concatenate((np.ones(1), ma)), v)
    e[m:] = v
    return e


css_residuals = choose(_residuals_loop, _residuals_numpy)



@jit
def _within_radius(coefs, r):
    """Schur-Cohn step-down: are all reciprocal roots strictly inside radius ``r``?"""
    k = coefs.shape[0]
    a = np.empty(k)
    scale = 1.0
    for i in range(k):
        scale /= r
        a[i] = coefs[i] * scale
    b = np.empty(k)
    for m in range(k, 0, -1):
        kappa = a[m - 1]
        if abs(kappa) >= 1.0:
            return False
        denom = 1.0 - kappa * kappa
        for i in range(m - 1):
            b[i] = (a[i] + kappa * a[m - 2 - i]) / denom
        for i in range(m - 1):
            a[i] = b[i]
    return True


@jit
def _spectral_radius(coefs):
    """Largest modulus among the reciprocal roots of 1 - sum_k c_k z^k.

    Values at or below ``ROOT_LIMIT`` are only guaranteed to be bounds; callers
    use the excess over ``ROOT_LIMIT``, which is exact.
    """
    k = coefs.shape[0]
    if k == 0:
        return 0.0
    total = 0.0
    for i in range(k):
        total += abs(coefs[i])
    if total <= ROOT_LIMIT:
        # sum |c| bounds the spectral radius; exact value not needed below the limit
        return total
    if k == 1:
        return abs(coefs[0])
    if _within_radius(coefs, ROOT_LIMIT):
        return 0.0
    comp = np.zeros((k, k), dtype=np.complex128)
    for i in range(k):
        comp[0, i] = coefs[i]
    for i in range(1, k):
        comp[i, i - 1] = 1.0
    lam = np.linalg.eigvals(comp)
    r = 0.0
    for v in lam:
        a = abs(v)
        if a > r:
            r = a
    return r


@jit
def _objective(x, w, p, q, pen_scale):
    mu = x[0]
    ar = x[1:1 + p]
    ma = x[1 + p:1 + p + q]
    e = css_residuals(w, mu, ar, ma)
    m = max(p, q)
    sse = 0.0
    for t in range(m, w.shape[0]):
        sse += e[t] * e[t]
    if not np.isfinite(sse):
        return _BIG
    ex_ar = _spectral_radius(ar) - ROOT_LIMIT
    ex_ma = _spectral_radius(-ma) - ROOT_LIMIT
    pen = 0.0
    if ex_ar > 0.0:
        pen += ex_ar * ex_ar
    if ex_ma > 0.0:
        pen += ex_ma * ex_ma
    return sse + pen_scale * PENALTY_WEIGHT * pen


@jit
def _nelder_mead(w, p, q, x0, step, pen_scale, maxiter, tol, abs_tol):
    dim = x0.shape[0]
    sim = np.empty((dim + 1, dim))
    fs = np.empty(dim + 1)
    for i in range(dim + 1):
        for j in range(dim):
            sim[i, j] = x0[j]
        if i > 0:
            sim[i, i - 1] += step[i - 1]
        fs[i] = _objective(sim[i], w, p, q, pen_scale)
    cen = np.empty(dim)
    xr = np.empty(dim)
    xe = np.empty(dim)
    xc = np.empty(dim)
    it = 0
    converged = False
    while True:
        order = np.argsort(fs, kind="mergesort")
        sim = sim[order]
        fs = fs[order]
        if fs[dim] - fs[0] <= tol * abs(fs[0]) + abs_tol:
            converged = True
            break
        if it >= maxiter:
            break
        it += 1
        for j in range(dim):
            acc = 0.0
            for i in range(dim):
                acc += sim[i, j]
            cen[j] = acc / dim
        for j in range(dim):
            xr[j] = 2.0 * cen[j] - sim[dim, j]
        fr = _objective(xr, w, p, q, pen_scale)
        if fr < fs[0]:
            for j in range(dim):
                xe[j] = 3.0 * cen[j] - 2.0 * sim[dim, j]
            fe = _objective(xe, w, p, q, pen_scale)
            if fe < fr:
                sim[dim] = xe
                fs[dim] = fe
            else:
                sim[dim] = xr
                fs[dim] = fr
            continue
        if fr < fs[dim - 1]:
            sim[dim] = xr
            fs[dim] = fr
            continue
        if fr < fs[dim]:
            for j in range(dim):
                xc[j] = cen[j] + 0.5 * (xr[j] - cen[j])
            fc = _objective(xc, w, p, q, pen_scale)
            accept = fc <= fr
        else:
            for j in range(dim):
                xc[j] = cen[j] + 0.5 * (sim[dim, j] - cen[j])
            fc = _objective(xc, w, p, q, pen_scale)
            accept = fc < fs[dim]
        if accept:
            sim[dim] = xc
            fs[dim] = fc
            continue
        for i in range(1, dim + 1):
            for j in range(dim):
                sim[i, j] = sim[0, j] + 0.5 * (sim[i, j] - sim[0, j])
            fs[i] = _objective(sim[i], w, p, q, pen_scale)
    return sim[0].copy(), fs[0], it, converged


# --- fitting -----------------------------------------------------------------

def yule_walker(w, p: int) -> np.ndarray:
    """AR coefficients from biased sample autocovariances."""
    if p == 0:
        return np.zeros(0)
    x = np.asarray(w, dtype=np.float64) - np.mean(w)
    n = len(x)
    acov = np.array([x[: n - k] @ x[k:] / n for k in range(p + 1)])
    if acov[0] <= 0:
        return np.zeros(p)
    try:
        phi = solve_toeplitz(acov[:p], acov[1:])
    except np.linalg.LinAlgError:
        return np.zeros(p)
    if not np.all(np.isfinite(phi)):
        return np.zeros(p)
    return phi


def _conditional_ls(w, p):
    """Exact CSS minimiser for pure AR models (ordinary least squares)."""
    n = len(w)
    if p == 0:
        return np.array([w.mean()])
    X = np.ones((n - p, p + 1))
    for i in range(p):
        X[:, 1 + i] = w[p - 1 - i:n - 1 - i]
    beta, *_ = np.linalg.lstsq(X, w[p:], rcond=None)
    phi = beta[1:]
    denom = 1.0 - phi.sum()
    if not np.all(np.isfinite(beta)) or abs(denom) < 1e-8:
        return None
    if _spectral_radius(np.ascontiguousarray(phi)) >= ROOT_LIMIT:
        return None
    return np.concatenate(([beta[0] / denom], phi))


def _sse(w, params, p, q):
    e = css_residuals(w, float(params[0]), np.ascontiguousarray(params[1:1 + p]),
                      np.ascontiguousarray(params[1 + p:]))
    return float(np.sum(e[max(p, q):] ** 2))


def _build_model(order, params, sse, n_eff, train_len, converged, iterations):
    sigma2 = max(sse / n_eff, _SIGMA2_FLOOR)
    aic = n_eff * math.log(sigma2) + 2 * order.n_params
    p = order.p
    return ArimaModel(order, float(params[0]), tuple(float(v) for v in params[1:1 + p]),
                      tuple(float(v) for v in params[1 + p:]), float(sigma2), float(aic),
                      int(train_len), converged, int(iterations))


def fit_css(s, order, *, maxiter: int = MAX_ITER, tol: float = TOL, init=None) -> ArimaModel:
    """Fit one ARIMA order by conditional sum of squares.

    Pure AR orders are solved exactly by least squares when the solution is
    stationary; everything else runs a Nelder-Mead simplex started from
    Yule-Walker AR coefficients, zero MA coefficients and the sample mean
    (or from ``init`` when given).  Raises :class:`ConvergenceError` carrying
    the best-so-far model when ``maxiter`` is exhausted.
    """
    order = order if isinstance(order, ArimaOrder) else ArimaOrder(*order)
    p, d, q = order.p, order.d, order.q
    y = np.asarray(s, dtype=np.float64)
    if len(y) <= p + q + d:
        raise LengthError(f"ARIMA{order} needs more than {p + q + d} observations, got {len(y)}")
    if len(y) < 10 * order.n_params:
        warnings.warn(f"ARIMA{order} on {len(y)} points: fewer than 10 per parameter",
                      ShortSeriesWarning, stacklevel=2)
    w = np.ascontiguousarray(difference(y, d))
    n_eff = len(w) - max(p, q)
    if n_eff < 1:
        raise LengthError(f"ARIMA{order} leaves no residuals on {len(y)} points")

    if q == 0 and init is None:
        params = _conditional_ls(w, p)
        if params is not None:
            return _build_model(order, params, _sse(w, params, p, q), n_eff, len(y), True, 0)

    scale = float(np.std(w))
    if not scale > 0:
        scale = max(abs(float(np.mean(w))), 1.0)
    if init is not None:
        x0 = np.asarray(init, dtype=np.float64).copy()
        if x0.shape != (order.n_params,):
            raise ParameterError(f"init has {x0.shape} values, ARIMA{order} needs {order.n_params}")
    else:
        x0 = np.concatenate(([w.mean()], yule_walker(w, p), np.zeros(q)))
    # a warm start is already near the optimum, so probe a tighter simplex
    rel = WARM_STEP if init is not None else COLD_STEP
    step = np.full(order.n_params, rel)
    step[0] = rel * scale
    sse0 = _sse(w, x0, p, q)
    pen_scale = max(sse0, 1e-12 * n_eff * scale * scale) if np.isfinite(sse0) else n_eff * scale * scale
    abs_tol = 1e-15 * n_eff * scale * scale
    xbest, _, iters, converged = _nelder_mead(w, p, q, x0, step, pen_scale, int(maxiter), float(tol), abs_tol)
    model = _build_model(order, xbest, _sse(w, xbest, p, q), n_eff, len(y), bool(converged), iters)
    if not converged:
        raise ConvergenceError(f"ARIMA{order} did not converge in {maxiter} iterations", best=model)
    return model


def grid_orders(max_p: int = GRID_BOUNDS[0], max_d: int = GRID_BOUNDS[1], max_q: int = GRID_BOUNDS[2]):
    if min(max_p, max_d, max_q) < 0:
        raise ParameterError("grid bounds must be non-negative")
    return [ArimaOrder(p, d, q) for p in range(max_p + 1) for d in range(max_d + 1) for q in range(max_q + 1)]


@dataclass
class GridSearchResult:
    best: ArimaModel
    models: dict
    failures: dict
    unconverged: list


def _selection_key(model: ArimaModel):
    return (model.aic, model.order.p + model.order.q, tuple(model.order))


def grid_search(s, bounds=GRID_BOUNDS, *, orders=None, warm: dict | None = None,
                accept_unconverged: bool = False, maxiter: int = MAX_ITER, tol: float = TOL,
                details: bool = False):
    """Fit every order in the grid and keep the one with the lowest AIC.

    Ties go to fewer parameters, then to the lexicographically smaller order.
    ``warm`` maps orders to parameter vectors used as starting points.  Cells
    that hit the iteration cap only compete when no cell converged (or always,
    with ``accept_unconverged``); their best-so-far fits tend to sit on the
    invertibility boundary with a spuriously small SSE.
    """
    cells = list(orders) if orders is not None else grid_orders(*bounds)
    if not cells:
        raise ParameterError("empty order grid")
    models, failures, unconverged = {}, {}, []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ShortSeriesWarning)
        for order in cells:
            order = order if isinstance(order, ArimaOrder) else ArimaOrder(*order)
            init = None if warm is None else warm.get(order)
            try:
                models[order] = fit_css(s, order, maxiter=maxiter, tol=tol, init=init)
            except ConvergenceError as exc:
                unconverged.append(order)
                models[order] = exc.best
            except LengthError as exc:
                failures[order] = exc
    if not models:
        raise GridSearchError(failures)
    pool = [m for m in models.values() if m.converged]
    if accept_unconverged or not pool:
        pool = list(models.values())
    best = min(pool, key=_selection_key)
    if details:
        return GridSearchResult(best, models, failures, unconverged)
    return best


def forecast_one(model: ArimaModel, history) -> float:
    """One-step-ahead forecast given the full history (in training units)."""
    p, d, q = model.order.p, model.order.d, model.order.q
    h = np.asarray(history, dtype=np.float64)
    if len(h) < p + d or (d and len(h) <= d):
        raise LengthError(f"ARIMA{model.order} forecast needs at least {max(p + d, d + 1)} values")
    mu = model.intercept
    if len(h) - d <= 0:
        return undifference(mu, h, d)
    w = np.ascontiguousarray(difference(h, d))
    ar = np.array(model.ar, dtype=np.float64)
    ma = np.array(model.ma, dtype=np.float64)
    e = css_residuals(w, mu, ar, ma)
    n = len(w)
    pred = mu
    for i in range(p):
        pred += ar[i] * (w[n - 1 - i] - mu)
    for j in range(q):
        if n - 1 - j >= 0:
            pred += ma[j] * e[n - 1 - j]
    return undifference(pred, h, d)
