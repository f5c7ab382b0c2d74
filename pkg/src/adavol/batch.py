"""Iterative (batch) QMLE baseline.

:func:`fit` minimizes the mean quasi-likelihood over the feasible set;
:func:`rolling_refit` repeats the fit on growing prefixes every
``increment`` observations and assigns each fit to the block of
observations it closes, so the resulting variance path is forward-looking
by up to one block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import VAR_FLOOR
from .errors import InvalidConfig, NonConvergence
from .estimator import project
from .filter import variance_path
from .garch import GarchParams, ModelOrder, VteParams
from .loss import batch_loss

try:
    from scipy.optimize import minimize
except ImportError:  # pragma: no cover - exercised only without scipy
    minimize = None

__all__ = ["FitResult", "RefitSchedule", "RollingFit", "fit", "rolling_refit", "refit_every_step"]

OMEGA_FLOOR = 1e-12


@dataclass(frozen=True)
class RefitSchedule:
    increment: int = 2000
    warm_start: bool = True

    def __post_init__(self):
        if self.increment < 1:
            raise InvalidConfig("increment must be >= 1")


@dataclass
class FitResult:
    theta: np.ndarray
    params: GarchParams | VteParams
    objective: float
    start_objective: float
    n_iter: int
    n_eval: int
    converged: bool
    pg_norm: float
    message: str = ""


class _Problem:
    """Mean QL objective over a fixed series, in vector form."""

    def __init__(self, x, order: ModelOrder, mode: str, margin: float):
        self.x = np.ascontiguousarray(x, dtype=float)
        self.n = len(self.x)
        self.order = order
        self.mode = mode
        self.cap = 1.0 - margin
        self.off = 1 if mode == "full" else 0
        self.gamma2 = max(float(np.var(self.x)), VAR_FLOOR) if mode == "vte" else None
        self.n_eval = 0

    def params(self, theta) -> GarchParams | VteParams:
        if self.mode == "full":
            return GarchParams.from_vector(theta, self.order)
        return VteParams.from_vector(theta, self.order, self.gamma2)

    def value_grad(self, theta):
        self.n_eval += 1
        total, grad = batch_loss(self.x, self.params(theta))
        return total / self.n, grad / self.n

    def project(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.empty_like(theta)
        if self.off:
            out[0] = max(theta[0], OMEGA_FLOOR)
        out[self.off :] = project(theta[self.off :], self.cap)
        return out

    def pg_norm(self, theta, grad) -> float:
        return float(np.max(np.abs(theta - self.project(theta - grad))))

    def bounds(self):
        b = [(0.0, self.cap)] * (self.order.p + self.order.q)
        return ([(OMEGA_FLOOR, None)] if self.off else []) + b


def _lbfgsb(prob: _Problem, x0, max_iters, tol):
    rho = 1e4

    def fun(theta):
        f, g = prob.value_grad(theta)
        excess = theta[prob.off :].sum() - prob.cap
        if excess > 0.0:
            f += rho * excess * excess
            g = g.copy()
            g[prob.off :] += 2.0 * rho * excess
        return f, g

    res = minimize(
        fun, x0, jac=True, method="L-BFGS-B", bounds=prob.bounds(),
        options={"maxiter": max_iters, "ftol": 1e-15, "gtol": tol, "maxls": 50},
    )
    return prob.project(res.x), int(res.nit), str(res.message)


def _projected_gradient(prob: _Problem, x0, max_iters, tol):
    theta = prob.project(x0)
    f, g = prob.value_grad(theta)
    step = 1.0 / max(np.max(np.abs(g)), 1e-12)
    it = 0
    msg = "max_iters reached"
    for it in range(1, max_iters + 1):
        if prob.pg_norm(theta, g) <= tol:
            msg = "projected gradient below tolerance"
            it -= 1
            break
        s = step
        for _ in range(60):
            cand = prob.project(theta - s * g)
            fc, gc = prob.value_grad(cand)
            if np.isfinite(fc) and fc <= f + 1e-4 * g @ (cand - theta):
                break
            s *= 0.5
        else:
            msg = "line search failed"
            break
        dtheta = cand - theta
        dgrad = gc - g
        theta, f, g = cand, fc, gc
        curv = dtheta @ dgrad
        step = (dtheta @ dtheta) / curv if curv > 0 else s * 2.0
    return theta, it, msg


def fit(series, theta0, order=None, mode: str = "full", max_iters: int = 500,
        tol: float = 1e-6, method: str = "lbfgsb", margin: float = 1e-6) -> FitResult:
    """Bounded minimization of the mean quasi-likelihood.

    ``theta0`` is ``(omega, alpha, beta)`` in full mode or ``(alpha, beta)``
    under variance targeting (where ``gamma2`` is the sample variance of
    ``series``); a parameter object is accepted too. Convergence means the
    projected-gradient sup-norm is at most ``tol``; otherwise a
    :class:`~adavol.errors.NonConvergence` warning is issued and the best
    iterate returned.
    """
    if mode not in ("full", "vte"):
        raise InvalidConfig(f"mode must be 'full' or 'vte', got {mode!r}")
    if isinstance(theta0, (GarchParams, VteParams)):
        order = theta0.order if order is None else order
        vec = theta0.to_vector()
        if mode == "vte" and isinstance(theta0, GarchParams):
            vec = vec[1:]
        elif mode == "full" and isinstance(theta0, VteParams):
            vec = theta0.to_full().to_vector()
        theta0 = vec
    if order is None:
        raise InvalidConfig("order is required when theta0 is a plain vector")
    order = ModelOrder.checked(*order)
    prob = _Problem(series, order, mode, margin)
    d = order.p + order.q + prob.off
    theta0 = np.asarray(theta0, dtype=float).ravel()
    if theta0.shape != (d,):
        raise InvalidConfig(f"theta0 must have {d} entries, got {theta0.shape[0]}")
    if prob.n < 10 * d:
        raise InvalidConfig(f"need at least {10 * d} observations, got {prob.n}")

    start = prob.project(theta0)
    f0, _ = prob.value_grad(start)
    if method == "lbfgsb" and minimize is not None:
        theta, nit, msg = _lbfgsb(prob, start, max_iters, tol)
    elif method in ("pg", "lbfgsb"):
        theta, nit, msg = _projected_gradient(prob, start, max_iters, tol)
    else:
        raise InvalidConfig(f"unknown method {method!r}")
    f, g = prob.value_grad(theta)
    if not np.isfinite(f) or f > f0:
        theta, f = start, f0
        f, g = prob.value_grad(theta)
    pg = prob.pg_norm(theta, g)
    converged = pg <= tol
    if not converged:
        warnings.warn(NonConvergence(f"fit stopped with projected gradient {pg:.3g} > {tol:g} ({msg})"),
                      stacklevel=2)
    return FitResult(theta, prob.params(theta), float(f), float(f0), nit, prob.n_eval,
                     converged, pg, msg)


@dataclass
class RollingFit:
    """Piecewise-constant parameter path from prefix re-fits."""

    theta: np.ndarray
    variance: np.ndarray
    fits: list = field(default_factory=list)
    ends: list = field(default_factory=list)
    gamma2: np.ndarray | None = None

    @property
    def n_nonconverged(self) -> int:
        return sum(not f.converged for f in self.fits)

    @property
    def total_iterations(self) -> int:
        return sum(f.n_iter for f in self.fits)


def refit_points(n: int, increment: int, min_n: int = 1) -> list[int]:
    """Prefix lengths at which the batch fit is refreshed.

    Points below ``min_n`` are dropped, so the first fit also covers the
    observations before it.
    """
    ends = [k for k in range(increment, n + 1, increment) if k >= min_n]
    if not ends or ends[-1] != n:
        ends.append(n)
    return ends


def rolling_refit(series, theta0, order, schedule: RefitSchedule = RefitSchedule(),
                  mode: str = "full", **fit_kw) -> RollingFit:
    """Fit on ``x[:k]`` for ``k = increment, 2*increment, ..., n``.

    Each fit supplies the parameters and filtered variances for the block
    ``(previous k, k]``. When ``n`` is not a multiple of the increment the
    last fit uses the whole series and covers the remainder; when ``n`` is
    smaller than the increment a single fit on the full series is made.
    Refit points shorter than the fitter's minimum sample are skipped.
    """
    x = np.ascontiguousarray(series, dtype=float)
    n = len(x)
    order = ModelOrder.checked(*order)
    d = order.p + order.q + (1 if mode == "full" else 0)
    ends = refit_points(n, schedule.increment, 10 * d)
    theta_path = np.empty((n, d))
    variance = np.empty(n)
    g2_path = np.empty(n) if mode == "vte" else None
    fits = []
    start = np.asarray(theta0.to_vector() if hasattr(theta0, "to_vector") else theta0, dtype=float)
    if mode == "vte" and isinstance(theta0, GarchParams):
        start = start[1:]
    init = start
    lo = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        for k in ends:
            res = fit(x[:k], init, order, mode=mode, **fit_kw)
            fits.append(res)
            theta_path[lo:k] = res.theta
            variance[lo:k] = variance_path(x[:k], res.params)[lo:k]
            if g2_path is not None:
                g2_path[lo:k] = res.params.gamma2
            if schedule.warm_start:
                init = res.theta
            lo = k
    return RollingFit(theta_path, variance, fits, ends, g2_path)


def refit_every_step(series, theta0, order, mode: str = "full", start: int | None = None,
                     **fit_kw) -> np.ndarray:
    """Streaming use of the batch estimator: re-fit on ``x[:t]`` for every ``t``.

    Each fit is warm-started from the previous one. Fits begin once ``t``
    reaches ``start`` (default ``10 * d``, the minimum sample the fitter
    accepts); earlier rows hold the initial guess.
    """
    x = np.ascontiguousarray(series, dtype=float)
    order = ModelOrder.checked(*order)
    d = order.p + order.q + (1 if mode == "full" else 0)
    start = 10 * d if start is None else max(start, 10 * d)
    out = np.empty((len(x), d))
    cur = np.asarray(theta0, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        for t in range(1, len(x) + 1):
            if t >= start:
                cur = fit(x[:t], cur, order, mode=mode, **fit_kw).theta
            out[t - 1] = cur
    return out
