"""Gaussian quasi-likelihood losses and their derivatives.

Per-observation loss ``l = 0.5 * (x**2 / v + log v)`` where ``v`` is the
filtered conditional variance. Gradients and Hessians are chained through
the variance derivatives produced by :mod:`adavol.filter`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import NonPositiveVariance, WindowTooSmall
from .filter import _seeds, derivative_path, mode_of

__all__ = [
    "LossEval",
    "loss",
    "loss_gradient",
    "loss_hessian",
    "batch_loss",
    "hessian_path",
    "min_hessian_eig",
    "arch1_hessian_eigenvalue",
]


@dataclass(frozen=True)
class LossEval:
    loss: float
    grad: np.ndarray
    hess: np.ndarray | None = None


def _check_v(v):
    if not v > 0.0:
        raise NonPositiveVariance(f"variance must be > 0, got {v}")


def loss(x: float, v: float) -> float:
    _check_v(v)
    return 0.5 * (x * x / v + np.log(v))


def loss_gradient(x: float, v: float, dv) -> np.ndarray:
    _check_v(v)
    return np.asarray(dv, dtype=float) * ((v - x * x) / (2.0 * v * v))


def loss_hessian(x: float, v: float, dv, d2v=None) -> np.ndarray:
    """Hessian of the per-observation loss.

    ``outer(dv, dv) * (2 x^2 - v) / (2 v^3) + d2v * (v - x^2) / (2 v^2)``;
    ``d2v=None`` means the variance is linear in the parameters.
    """
    _check_v(v)
    dv = np.asarray(dv, dtype=float)
    x2 = x * x
    h = np.outer(dv, dv) * ((2.0 * x2 - v) / (2.0 * v**3))
    if d2v is not None:
        h = h + np.asarray(d2v, dtype=float) * ((v - x2) / (2.0 * v * v))
    return 0.5 * (h + h.T)


def batch_loss(series, params, x2_init: float | None = None,
               v_init: float | None = None) -> tuple[float, np.ndarray]:
    """Summed loss over ``series`` and its gradient (compiled kernel).

    The mode is taken from the parameter type: :class:`GarchParams`
    differentiates over ``(omega, alpha, beta)``, :class:`VteParams` over
    ``(alpha, beta)`` with ``gamma2`` held fixed.
    """
    x = np.ascontiguousarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("series must be non-empty")
    mode = mode_of(params)
    x2s, vs = _seeds(params, x2_init, v_init)
    level = params.gamma2 if mode == "vte" else params.omega
    grad = np.empty(params.dim)
    total = kernels.qml_objective(
        x, level, np.asarray(params.alpha, dtype=float), np.asarray(params.beta, dtype=float),
        mode == "vte", x2s, vs, grad, None,
    )
    return float(total), grad


def hessian_path(series, params) -> np.ndarray:
    """Per-observation loss Hessians, shape ``(n, d, d)``."""
    x = np.asarray(series, dtype=float)
    v, dv, d2v = derivative_path(x, params, second_order=True)
    x2 = x * x
    outer = dv[:, :, None] * dv[:, None, :]
    h = outer * ((2.0 * x2 - v) / (2.0 * v**3))[:, None, None]
    h += d2v * ((v - x2) / (2.0 * v * v))[:, None, None]
    return 0.5 * (h + np.swapaxes(h, 1, 2))


def min_hessian_eig(series, params, window: int) -> np.ndarray:
    """Smallest eigenvalue of the window-averaged Hessian, per full window."""
    d = params.dim
    if window < d:
        raise WindowTooSmall(f"window {window} smaller than parameter dimension {d}")
    h = hessian_path(series, params)
    nwin = len(h) // window
    out = np.empty(nwin)
    for k in range(nwin):
        avg = h[k * window : (k + 1) * window].mean(axis=0)
        out[k] = np.linalg.eigvalsh(avg)[0]
    return out


def arch1_hessian_eigenvalue(x_t: float, x_prev: float, v: float) -> float:
    """Closed-form non-zero eigenvalue of the ARCH(1) full-mode loss Hessian."""
    return (1.0 + x_prev**4) * (2.0 * x_t * x_t - v) / (2.0 * v**3)
