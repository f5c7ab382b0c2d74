"""Conditional-variance filter and its parameter derivatives.

A :class:`FilterState` holds the lag buffers needed to produce the next
variance ``sigma2[t]`` and its gradient with respect to the parameters.
Two parameterizations are supported: ``"full"`` over
``(omega, alpha, beta)`` and ``"vte"`` over ``(alpha, beta)`` with a fixed
target variance ``gamma2``.

Typical per-step use::

    v = variance_step_full(state, params, x_prev)
    dv = gradient_step(state, params, "full")

For whole series prefer :func:`variance_path` (compiled) or
:func:`derivative_path`.
"""

from __future__ import annotations

import numpy as np

from ._backend import VAR_FLOOR, kernels
from .errors import ModeMismatch, NonPositiveVariance
from .garch import GarchParams, ModelOrder, VteParams

__all__ = [
    "FilterState",
    "variance_step_full",
    "variance_step_vte",
    "gradient_step",
    "hessian_step",
    "variance_path",
    "derivative_path",
    "mode_of",
]

MODES = ("full", "vte")


def mode_of(params) -> str:
    if isinstance(params, VteParams):
        return "vte"
    if isinstance(params, GarchParams):
        return "full"
    raise TypeError(f"expected GarchParams or VteParams, got {type(params).__name__}")


class FilterState:
    """Lag buffers for one variance recursion.

    ``lag_x2[i]`` is ``X[t-1-i]**2``, ``lag_v[j]`` is ``sigma2[t-1-j]`` and
    ``lag_dv[j]`` its gradient, where ``t`` is the step whose variance is
    produced next. Buffers are seeded with constants before the first step.
    """

    def __init__(self, order, mode: str = "full", x2_init: float = 0.0,
                 v_init: float = 0.0, second_order: bool = False):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.order = ModelOrder.checked(*order)
        self.mode = mode
        p, q = self.order
        self.dim = p + q + (1 if mode == "full" else 0)
        self.lag_x2 = np.full(p, float(x2_init))
        self.lag_v = np.full(q, float(v_init))
        self.lag_dv = np.zeros((q, self.dim))
        self.second_order = second_order
        self.lag_d2v = np.zeros((q, self.dim, self.dim)) if second_order else None
        self.t = 0
        self.v = None
        self.dv = None
        self.d2v = None
        self._params = None

    @classmethod
    def seeded(cls, params, second_order: bool = False) -> "FilterState":
        """Default seeding: zeros in full mode, ``gamma2`` under variance targeting."""
        mode = mode_of(params)
        seed = params.gamma2 if mode == "vte" else 0.0
        return cls(params.order, mode, seed, seed, second_order)

    # -- internals ---------------------------------------------------------

    def _check(self, params, mode=None):
        pmode = mode_of(params)
        if mode is not None and mode != pmode:
            raise ModeMismatch(f"requested mode {mode!r} but params are {pmode!r}")
        if pmode != self.mode:
            raise ModeMismatch(f"state is {self.mode!r}, params are {pmode!r}")
        if params.order != self.order:
            raise ModeMismatch(f"state order {self.order} differs from params order {params.order}")

    def _beta_offset(self) -> int:
        return self.order.p + (1 if self.mode == "full" else 0)

    def variance(self, params) -> float:
        """Variance implied by the current lags (no state change)."""
        self._check(params)
        a = np.asarray(params.alpha)
        b = np.asarray(params.beta)
        if self.mode == "full":
            v = params.omega + a @ self.lag_x2 + b @ self.lag_v
        else:
            g2 = params.gamma2
            v = g2 + a @ (self.lag_x2 - g2) + b @ (self.lag_v - g2)
        if not np.isfinite(v):
            raise NonPositiveVariance(f"non-finite variance {v}")
        return max(float(v), VAR_FLOOR)

    def innovation_vector(self, params) -> np.ndarray:
        """The direct term of the gradient recursion (before lagged gradients)."""
        self._check(params)
        if self.mode == "full":
            return np.concatenate(([1.0], self.lag_x2, self.lag_v))
        g2 = params.gamma2
        return np.concatenate((self.lag_x2 - g2, self.lag_v - g2))

    def gradient(self, params) -> np.ndarray:
        theta_t = self.innovation_vector(params)
        b = np.asarray(params.beta)
        if len(b):
            theta_t = theta_t + b @ self.lag_dv
        return theta_t

    def hessian(self, params) -> np.ndarray:
        """Second derivative of the variance with respect to the parameters.

        Only the beta entries of the direct term depend on the parameters, via
        the lagged variances, so the recursion is
        ``d2v[k, l] = [k = b_j] dv[t-j, l] + [l = b_j] dv[t-j, k] + sum_j b_j d2v[t-j, k, l]``.
        """
        if not self.second_order:
            raise ValueError("state was created without second-order tracking")
        self._check(params)
        off = self._beta_offset()
        h = np.zeros((self.dim, self.dim))
        for j, bj in enumerate(params.beta):
            h[off + j, :] += self.lag_dv[j]
            h[:, off + j] += self.lag_dv[j]
            h += bj * self.lag_d2v[j]
        return h

    def advance(self, params, x_prev: float) -> float:
        """Commit the current step, push ``x_prev`` and produce the next variance."""
        self._check(params)
        if self.t > 0:
            prev = self._params
            if self.dv is None:
                self.dv = self.gradient(prev)
            if self.second_order and self.d2v is None:
                self.d2v = self.hessian(prev)
            if self.order.q:
                self.lag_v = np.roll(self.lag_v, 1)
                self.lag_v[0] = self.v
                self.lag_dv = np.roll(self.lag_dv, 1, axis=0)
                self.lag_dv[0] = self.dv
                if self.second_order:
                    self.lag_d2v = np.roll(self.lag_d2v, 1, axis=0)
                    self.lag_d2v[0] = self.d2v
        if x_prev is not None and self.order.p:
            self.lag_x2 = np.roll(self.lag_x2, 1)
            self.lag_x2[0] = float(x_prev) ** 2
        self.t += 1
        self._params = params
        self.v = self.variance(params)
        self.dv = None
        self.d2v = None
        return self.v

    def copy(self) -> "FilterState":
        new = object.__new__(FilterState)
        new.__dict__.update(self.__dict__)
        for name in ("lag_x2", "lag_v", "lag_dv", "lag_d2v", "dv", "d2v"):
            val = getattr(self, name)
            if isinstance(val, np.ndarray):
                setattr(new, name, val.copy())
        return new


def variance_step_full(state: FilterState, params: GarchParams, x_prev: float | None) -> float:
    """Advance a full-mode state by one observation and return ``sigma2[t]``.

    ``x_prev`` is ``X[t-1]``; pass ``None`` for the very first step when
    no observation precedes it.
    """
    if not isinstance(params, GarchParams):
        raise ModeMismatch("variance_step_full needs GarchParams")
    return state.advance(params, x_prev)


def variance_step_vte(state: FilterState, params: VteParams, x_prev: float | None) -> float:
    """Variance-targeting counterpart of :func:`variance_step_full`."""
    if not isinstance(params, VteParams):
        raise ModeMismatch("variance_step_vte needs VteParams")
    return state.advance(params, x_prev)


def gradient_step(state: FilterState, params, mode: str | None = None) -> np.ndarray:
    """Gradient of the current variance; recorded for the next recursion step."""
    state._check(params, mode)
    state.dv = state.gradient(params)
    return state.dv


def hessian_step(state: FilterState, params) -> np.ndarray:
    state.d2v = state.hessian(params)
    return state.d2v


def _seeds(params, x2_init, v_init):
    default = params.gamma2 if isinstance(params, VteParams) else 0.0
    return (default if x2_init is None else x2_init, default if v_init is None else v_init)


def variance_path(series, params, x2_init: float | None = None, v_init: float | None = None) -> np.ndarray:
    """One-step-ahead variances over a whole series (compiled kernel).

    Element ``t`` depends only on observations before ``t``.
    """
    x = np.ascontiguousarray(series, dtype=float)
    mode = mode_of(params)
    x2s, vs = _seeds(params, x2_init, v_init)
    level = params.gamma2 if mode == "vte" else params.omega
    out = np.empty(len(x))
    kernels.qml_objective(
        x, level, np.asarray(params.alpha, dtype=float), np.asarray(params.beta, dtype=float),
        mode == "vte", x2s, vs, None, out,
    )
    return out


def derivative_path(series, params, second_order: bool = False,
                    x2_init: float | None = None, v_init: float | None = None):
    """Variances with first (and optionally second) parameter derivatives.

    Returns ``(v, dv, d2v)`` with shapes ``(n,)``, ``(n, d)`` and
    ``(n, d, d)``; ``d2v`` is ``None`` unless requested. Interpreted loop,
    intended for diagnostics on moderate lengths.
    """
    mode = mode_of(params)
    x2s, vs = _seeds(params, x2_init, v_init)
    state = FilterState(params.order, mode, x2s, vs, second_order)
    x = np.asarray(series, dtype=float)
    n = len(x)
    v = np.empty(n)
    dv = np.empty((n, state.dim))
    d2v = np.empty((n, state.dim, state.dim)) if second_order else None
    prev = None
    for t in range(n):
        v[t] = state.advance(params, prev)
        dv[t] = gradient_step(state, params)
        if second_order:
            d2v[t] = hessian_step(state, params)
        prev = x[t]
    return v, dv, d2v
