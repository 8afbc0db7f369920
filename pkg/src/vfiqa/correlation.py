"""Metric-to-DMOS evaluation: VQEG logistic fit, PLCC, SRCC, KRCC, RMSE."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from scipy.stats import rankdata

MAX_ITER = 500
MIN_FIT_SAMPLES = 5


class DegenerateInputError(ValueError):
    """Input for which a statistic is undefined (too few samples, zero variance)."""


@dataclass(frozen=True)
class LogisticParams:
    beta1: float
    beta2: float
    beta3: float
    beta4: float

    def as_array(self):
        return np.array([self.beta1, self.beta2, self.beta3, self.beta4], dtype=np.float64)


@dataclass(frozen=True)
class EvalReport:
    plcc: float
    srcc: float
    krcc: float
    rmse: float
    params: LogisticParams
    n: int

    def to_dict(self):
        d = asdict(self)
        d.update(d.pop("params"))
        return d


def _logistic(x, b1, b2, b3, b4):
    return b2 + (b1 - b2) * expit((x - b3) / abs(b4))


def logistic(x, p: LogisticParams):
    """VQEG four-parameter logistic mapping objective score to predicted DMOS.

    ``b2 + (b1 - b2) / (1 + exp(-(x - b3) / |b4|))``. Works on scalars and arrays.
    """
    if p.beta4 == 0:
        raise ValueError("beta4 must be nonzero")
    y = _logistic(np.asarray(x, dtype=np.float64), p.beta1, p.beta2, p.beta3, p.beta4)
    return float(y) if np.ndim(y) == 0 else y


def _pair(x, y, min_n=2):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_n:
        raise DegenerateInputError(f"need at least {min_n} samples, got {x.size}")
    return x, y


def initial_params(x, y) -> LogisticParams:
    x, y = _pair(x, y)
    return LogisticParams(float(np.max(y)), float(np.min(y)), float(np.median(x)), float(np.std(x)) / 4.0)


def _sse_and_grad(b, x, y):
    b1, b2, b3, b4 = b
    s4 = abs(b4)
    z = (x - b3) / s4
    e = expit(z)
    r = b2 + (b1 - b2) * e - y
    de = e * (1.0 - e)
    g1 = e
    g2 = 1.0 - e
    g3 = -(b1 - b2) * de / s4
    g4 = -(b1 - b2) * de * z / s4 * math.copysign(1.0, b4)
    grad = 2.0 * np.array([r @ g1, r @ g2, r @ g3, r @ g4])
    return float(r @ r), grad


def fit_logistic(x, y) -> LogisticParams:
    """Least-squares fit of the logistic by BFGS from the standard start.

    Start: ``b1 = max(y)``, ``b2 = min(y)``, ``b3 = median(x)``,
    ``b4 = std(x) / 4``. The returned fit is never worse than the start.
    """
    x, y = _pair(x, y, MIN_FIT_SAMPLES)
    if np.all(x == x[0]):
        raise DegenerateInputError("cannot fit a logistic to constant scores")
    init = initial_params(x, y)
    b0 = init.as_array()
    sse0, _ = _sse_and_grad(b0, x, y)
    if sse0 == 0.0:
        return init
    res = minimize(
        _sse_and_grad, b0, args=(x, y), jac=True, method="BFGS",
        options={"maxiter": MAX_ITER, "gtol": 1e-12 * max(1.0, sse0)},
    )
    b = res.x
    if not np.all(np.isfinite(b)) or b[3] == 0 or not res.fun <= sse0:
        return init
    return LogisticParams(*map(float, b))


def sse(x, y, p: LogisticParams) -> float:
    r = logistic(np.asarray(x, dtype=np.float64), p) - np.asarray(y, dtype=np.float64)
    return float(r @ r)


def _pearson(x, y):
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateInputError("correlation undefined for zero-variance input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def plcc(x, y) -> float:
    """Pearson linear correlation coefficient."""
    return _pearson(*_pair(x, y))


def srcc(x, y) -> float:
    """Spearman rank correlation; tied values get their average rank."""
    x, y = _pair(x, y)
    return _pearson(rankdata(x), rankdata(y))


def krcc(x, y) -> float:
    """Kendall tau-b (tie-corrected)."""
    x, y = _pair(x, y)
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(x.size, k=1)
    sx = sx[iu]
    sy = sy[iu]
    s = int(np.sum(sx * sy))
    nx = int(np.count_nonzero(sx))
    ny = int(np.count_nonzero(sy))
    if nx == 0 or ny == 0:
        raise DegenerateInputError("Kendall tau undefined when one input is constant")
    return max(-1.0, min(1.0, s / math.sqrt(nx * ny)))


def rmse(x, y) -> float:
    x, y = _pair(x, y, 1)
    d = x - y
    return math.sqrt(float(d @ d) / d.size)


def evaluate_metric(scores, dmos) -> EvalReport:
    """Fit the logistic, then PLCC/RMSE on fitted predictions and SRCC/KRCC on raw scores."""
    x, y = _pair(scores, dmos, MIN_FIT_SAMPLES)
    p = fit_logistic(x, y)
    pred = logistic(x, p)
    if np.all(pred == pred[0]):
        # flat fit (e.g. constant DMOS): linear correlation is undefined
        raise DegenerateInputError("logistic fit is flat; PLCC undefined")
    return EvalReport(
        plcc=plcc(pred, y),
        srcc=srcc(x, y),
        krcc=krcc(x, y),
        rmse=rmse(pred, y),
        params=p,
        n=int(x.size),
    )
