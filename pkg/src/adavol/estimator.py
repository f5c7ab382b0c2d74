"""AdaVol: recursive quasi-likelihood estimation of GARCH(p, q) parameters.

Each observation triggers one projected AdaGrad step on the
variance-targeted parameters ``theta = (alpha, beta)``, while the target
variance ``gamma2`` is tracked by a streaming sample variance. The feasible
set is the capped simplex ``{theta >= 0, sum(theta) <= 1 - margin}``.

Example
-------
>>> from adavol import AdaVolConfig, ModelOrder, run_stream
>>> cfg = AdaVolConfig(order=ModelOrder(1, 1))
>>> res = run_stream(returns, theta0=(0.1, 0.8), config=cfg)  # doctest: +SKIP
>>> res.theta[-1], res.forecast  # doctest: +SKIP
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._backend import VAR_FLOOR, kernels
from ._pykernels import BATCH_COUNT, MEAN, PRED_V, T, VAR
from .errors import InvalidConfig, NonFiniteInput
from .garch import GarchParams, ModelOrder, VteParams

__all__ = [
    "AdaVolConfig",
    "AdaVolState",
    "StreamResult",
    "project",
    "init",
    "update",
    "run_stream",
]

MEAN_RECURSIONS = ("standard", "paper")


@dataclass(frozen=True)
class AdaVolConfig:
    """Tuning knobs.

    ``mean_recursion="paper"`` uses the running-mean recursion
    ``m_t = t/(t+1) m_{t-1} + x_t/(t+1)`` together with
    ``g_t = (t-1)/t g_{t-1} + (x_t - m_t)^2 / t``; ``"standard"`` tracks
    the exact sample mean and (1/t) sample variance.
    """

    order: ModelOrder = ModelOrder(1, 1)
    eta: float = 0.1
    eps: float = 1e-8
    margin: float = 1e-6
    mean_recursion: str = "standard"
    minibatch: int = 1
    stop_tol: float | None = None
    stop_window: int = 100

    def __post_init__(self):
        object.__setattr__(self, "order", ModelOrder.checked(*self.order))
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise InvalidConfig(f"eta must be > 0, got {self.eta}")
        if not self.eps > 0:
            raise InvalidConfig(f"eps must be > 0, got {self.eps}")
        if not 0 < self.margin < 1:
            raise InvalidConfig(f"margin must lie in (0, 1), got {self.margin}")
        if self.mean_recursion not in MEAN_RECURSIONS:
            raise InvalidConfig(f"mean_recursion must be one of {MEAN_RECURSIONS}")
        if int(self.minibatch) != self.minibatch or self.minibatch < 1:
            raise InvalidConfig(f"minibatch must be a positive integer, got {self.minibatch}")
        if self.stop_tol is not None and not self.stop_tol > 0:
            raise InvalidConfig("stop_tol must be positive when given")
        if self.stop_window < 1:
            raise InvalidConfig("stop_window must be >= 1")

    @property
    def dim(self) -> int:
        return self.order.p + self.order.q

    @property
    def cap(self) -> float:
        return 1.0 - self.margin


def project(v, cap: float) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) <= cap}``.

    Negative entries are clipped; if that already satisfies the sum bound it
    is the answer, otherwise the sort-and-threshold simplex projection onto
    ``sum(x) = cap`` is applied to ``v``.
    """
    if not cap > 0:
        raise ValueError("cap must be positive")
    return np.asarray(kernels.project_capped_simplex(np.asarray(v, dtype=float).ravel(), cap))


@dataclass
class AdaVolState:
    """Mutable state of one AdaVol recursion; owned by a single stream."""

    config: AdaVolConfig
    theta: np.ndarray
    accum_g2: np.ndarray
    scalars: np.ndarray = field(default_factory=lambda: np.zeros(5))
    lag_x2: np.ndarray = None
    lag_v: np.ndarray = None
    lag_dv: np.ndarray = None
    pred_dv: np.ndarray = None
    batch_g: np.ndarray = None

    def __post_init__(self):
        p, q = self.config.order
        d = p + q
        if self.lag_x2 is None:
            self.lag_x2 = np.zeros(p)
        if self.lag_v is None:
            self.lag_v = np.zeros(q)
        if self.lag_dv is None:
            self.lag_dv = np.zeros((q, d))
        if self.pred_dv is None:
            self.pred_dv = np.zeros(d)
        if self.batch_g is None:
            self.batch_g = np.zeros(d)

    @property
    def t(self) -> int:
        return int(self.scalars[T])

    @property
    def mean(self) -> float:
        return float(self.scalars[MEAN])

    @property
    def var(self) -> float:
        return float(self.scalars[VAR])

    @property
    def pred_vol2(self) -> float | None:
        """Variance forecast for the next, not yet seen, observation."""
        return float(self.scalars[PRED_V]) if self.t > 0 else None

    @property
    def gamma2(self) -> float:
        return max(self.var, VAR_FLOOR)

    @property
    def omega(self) -> float:
        """Intercept implied by the current estimate and target variance."""
        return self.gamma2 * (1.0 - float(self.theta.sum()))

    def params(self) -> VteParams:
        p = self.config.order.p
        return VteParams(self.theta[:p], self.theta[p:], self.gamma2)

    def full_params(self) -> GarchParams:
        return self.params().to_full()

    def copy(self) -> "AdaVolState":
        return AdaVolState(
            self.config, self.theta.copy(), self.accum_g2.copy(), self.scalars.copy(),
            self.lag_x2.copy(), self.lag_v.copy(), self.lag_dv.copy(),
            self.pred_dv.copy(), self.batch_g.copy(),
        )


def init(theta0, config: AdaVolConfig) -> AdaVolState:
    """Fresh state; an infeasible ``theta0`` is projected into the feasible set."""
    theta0 = np.asarray(theta0, dtype=float).ravel()
    if theta0.shape != (config.dim,):
        raise InvalidConfig(f"theta0 must have {config.dim} entries for {config.order}, got {theta0.shape[0]}")
    if not np.all(np.isfinite(theta0)):
        raise InvalidConfig("theta0 must be finite")
    theta = project(theta0, config.cap)
    return AdaVolState(config, theta, np.full(config.dim, config.eps))


def _pass(state: AdaVolState, x: np.ndarray):
    cfg = state.config
    n = len(x)
    traj = np.empty((n, cfg.dim))
    pred = np.empty(n)
    var = np.empty(n)
    done = kernels.adavol_pass(
        x, state.theta, state.accum_g2, state.scalars,
        state.lag_x2, state.lag_v, state.lag_dv, state.pred_dv, state.batch_g,
        cfg.eta, cfg.margin, cfg.mean_recursion == "paper", int(cfg.minibatch),
        float(cfg.stop_tol or 0.0), int(cfg.stop_window),
        traj, pred, var,
    )
    return done, traj[:done], pred[:done], var[:done]


def update(state: AdaVolState, x: float) -> tuple[AdaVolState, float]:
    """Consume one observation; returns the state and the next-step forecast."""
    x = float(x)
    if not math.isfinite(x):
        raise NonFiniteInput(f"observation must be finite, got {x}")
    _pass(state, np.array([x]))
    return state, state.pred_vol2


@dataclass
class StreamResult:
    """Output of :func:`run_stream`.

    ``theta[t]`` is the estimate after observation ``t``; ``forecast[t]`` is
    the variance predicted for observation ``t + 1``; ``variance[t]`` is the
    variance used for observation ``t`` itself, i.e. computed before it was
    seen (for the very first observation of a fresh stream it is ``x[0]**2``).
    """

    theta: np.ndarray
    forecast: np.ndarray
    variance: np.ndarray
    gamma2: np.ndarray
    state: AdaVolState
    order: ModelOrder

    def __len__(self) -> int:
        return len(self.forecast)

    @property
    def omega(self) -> np.ndarray:
        return np.maximum(self.gamma2, VAR_FLOOR) * (1.0 - self.theta.sum(axis=1))

    @property
    def final(self) -> VteParams:
        return self.state.params()

    def columns(self) -> list[str]:
        p, q = self.order
        return [f"alpha{i + 1}" for i in range(p)] + [f"beta{j + 1}" for j in range(q)]

    def to_records(self, start: int = 1) -> list[dict]:
        names = self.columns()
        recs = []
        for i in range(len(self)):
            rec = {"t": start + i}
            rec.update({k: float(v) for k, v in zip(names, self.theta[i])})
            rec["omega"] = float(self.omega[i])
            rec["gamma2"] = float(self.gamma2[i])
            rec["variance"] = float(self.variance[i])
            rec["forecast"] = float(self.forecast[i])
            recs.append(rec)
        return recs

    def write_csv(self, path) -> Path:
        path = Path(path)
        recs = self.to_records()
        fields = ["t", *self.columns(), "omega", "gamma2", "variance", "forecast"]
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for r in recs:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return path

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_records()))
        return path


def run_stream(series, theta0=None, config: AdaVolConfig | None = None,
               state: AdaVolState | None = None) -> StreamResult:
    """Fold :func:`update` over ``series`` using the compiled kernel.

    Pass ``state`` to continue an existing stream instead of ``theta0``.
    Cost per observation is O(p + q).
    """
    x = np.ascontiguousarray(series, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("series must contain at least one observation")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise NonFiniteInput(f"observation {bad} is not finite")
    if state is None:
        if config is None:
            raise InvalidConfig("config is required when no state is given")
        if theta0 is None:
            raise InvalidConfig("theta0 is required when no state is given")
        state = init(theta0, config)
    prev_pred = state.pred_vol2
    done, traj, pred, var = _pass(state, x)
    first = max(x[0] * x[0], VAR_FLOOR) if prev_pred is None else prev_pred
    variance = np.concatenate(([first], pred[:-1]))
    return StreamResult(traj, pred, variance, var, state, state.config.order)
