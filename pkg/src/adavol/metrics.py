"""Forecast accuracy scores for volatility predictions.

``mpe``/``mape`` compare a volatility forecast with the true volatility,
``mae_var`` compares variance forecasts with squared returns, and
``qs_score`` averages pinball losses of the Gaussian conditional quantiles
``vol * norm_inv_cdf(alpha)`` over a grid of levels.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AlphaOutOfRange, DomainError, LengthMismatch, NonPositiveTruth

__all__ = [
    "DEFAULT_ALPHAS",
    "EvalReport",
    "evaluate",
    "mae_var",
    "mape",
    "mpe",
    "norm_inv_cdf",
    "pinball",
    "qs_score",
]

DEFAULT_ALPHAS = np.round(np.arange(1, 100) / 100.0, 2)

# Wichura (1988), algorithm AS 241 (PPND16)
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coefs, x):
    out = np.zeros_like(x)
    for c in reversed(coefs):
        out = out * x + c
    return out


def norm_inv_cdf(p):
    """Standard normal quantile function (scalar or array input)."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError("probabilities must lie strictly between 0 and 1")
    q = arr - 0.5
    out = np.empty_like(arr)
    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if np.any(tail):
        qt = q[tail]
        r = np.where(qt < 0.0, arr[tail], 1.0 - arr[tail])
        r = np.sqrt(-np.log(r))
        val = np.where(
            r <= 5.0,
            _poly(_C, r - 1.6) / _poly(_D, r - 1.6),
            _poly(_E, r - 5.0) / _poly(_F, r - 5.0),
        )
        out[tail] = np.where(qt < 0.0, -val, val)
    return float(out) if out.ndim == 0 else out


def _pair(a, b, positive_first=False):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    if a.size == 0:
        raise LengthMismatch("empty input")
    if positive_first and np.any(~(a > 0.0)):
        raise NonPositiveTruth("true volatility must be strictly positive")
    return a, b


def mpe(true_vol, est_vol) -> float:
    """Mean signed percentage error ``mean((sigma - est) / sigma)``."""
    s, e = _pair(true_vol, est_vol, positive_first=True)
    return float(np.mean((s - e) / s))


def mape(true_vol, est_vol) -> float:
    s, e = _pair(true_vol, est_vol, positive_first=True)
    return float(np.mean(np.abs(s - e) / s))


def mae_var(returns, est_var) -> float:
    """Mean absolute gap between squared returns and variance forecasts."""
    r, v = _pair(returns, est_var)
    return float(np.mean(np.abs(r * r - v)))


def _check_alpha(alpha):
    a = np.asarray(alpha, dtype=float)
    if a.size == 0 or np.any(~((a > 0.0) & (a < 1.0))):
        raise AlphaOutOfRange("quantile levels must lie strictly between 0 and 1")
    return a


def pinball(x, vol, alpha: float):
    """Quantile loss of the Gaussian ``alpha``-quantile ``vol * z_alpha`` at ``x``."""
    alpha = float(_check_alpha(alpha))
    vol = np.asarray(vol, dtype=float)
    if np.any(~(vol > 0.0)):
        raise NonPositiveTruth("volatility must be positive")
    u = np.asarray(x, dtype=float) - norm_inv_cdf(alpha) * vol
    out = np.where(u > 0.0, alpha * u, (alpha - 1.0) * u)
    return float(out) if out.ndim == 0 else out


def qs_score(returns, est_vol, alphas=DEFAULT_ALPHAS) -> float:
    """Per-observation average of pinball losses summed over ``alphas``."""
    alphas = np.atleast_1d(_check_alpha(alphas))
    r, s = _pair(returns, est_vol)
    if np.any(~(s > 0.0)):
        raise NonPositiveTruth("volatility must be positive")
    z = norm_inv_cdf(alphas)
    u = r[:, None] - s[:, None] * z[None, :]
    loss = np.where(u > 0.0, alphas * u, (alphas - 1.0) * u)
    return float(loss.sum(axis=1).mean())


@dataclass
class EvalReport:
    mpe: float
    mape: float
    mae: float
    qs: float
    n: int
    alphas: list = field(default_factory=lambda: DEFAULT_ALPHAS.tolist())

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        d = self.to_dict()
        return json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()})

    @classmethod
    def csv_header(cls) -> str:
        return "mpe,mape,mae,qs,n,n_alphas"

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(
            [repr(self.mpe), repr(self.mape), repr(self.mae), repr(self.qs), self.n, len(self.alphas)]
        )
        return buf.getvalue()


def evaluate(returns, est_var, true_var=None, alphas=DEFAULT_ALPHAS) -> EvalReport:
    """Score a variance forecast path; MPE/MAPE are NaN without ``true_var``."""
    r, v = _pair(returns, est_var)
    vol = np.sqrt(v)
    if true_var is not None:
        tv = np.sqrt(np.asarray(true_var, dtype=float))
        e_mpe, e_mape = mpe(tv, vol), mape(tv, vol)
    else:
        e_mpe = e_mape = math.nan
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    return EvalReport(e_mpe, e_mape, mae_var(r, v), qs_score(r, vol, alphas), int(r.size), alphas.tolist())
