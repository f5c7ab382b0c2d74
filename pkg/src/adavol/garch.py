"""GARCH(p, q) model family: parameter types, validation, simulation.

The conditional variance follows

    sigma2[t] = omega + sum_i alpha[i] * X[t-i]**2 + sum_j beta[j] * sigma2[t-j]

with ``X[t] = sqrt(sigma2[t]) * Z[t]`` and i.i.d. standard Gaussian ``Z``.
Under variance targeting the intercept is replaced by the unconditional
variance ``gamma2`` through ``omega = gamma2 * (1 - sum(alpha) - sum(beta))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._backend import kernels
from .errors import NonNegativityViolation, StationarityViolation, UnsupportedOrder

__all__ = [
    "ModelOrder",
    "GarchParams",
    "VteParams",
    "SimOutput",
    "validate",
    "fourth_moment_ok",
    "strict_stationarity_estimate",
    "simulate",
    "random_params",
]


class ModelOrder(NamedTuple):
    """Lag orders: ``p`` ARCH terms and ``q`` GARCH terms."""

    p: int
    q: int

    @classmethod
    def parse(cls, text: str) -> "ModelOrder":
        """Parse ``"p,q"`` (e.g. ``"1,1"``); a lone ``"p"`` means ARCH(p)."""
        parts = [s.strip() for s in str(text).split(",") if s.strip()]
        if len(parts) == 1:
            parts.append("0")
        if len(parts) != 2:
            raise ValueError(f"cannot parse model order {text!r}")
        return cls.checked(int(parts[0]), int(parts[1]))

    @classmethod
    def checked(cls, p: int, q: int) -> "ModelOrder":
        if p < 0 or q < 0 or p + q < 1:
            raise UnsupportedOrder(f"invalid order ({p}, {q}): need p, q >= 0 and p + q >= 1")
        return cls(int(p), int(q))

    @property
    def is_arch(self) -> bool:
        return self.q == 0

    def __str__(self) -> str:
        return f"GARCH({self.p},{self.q})" if self.q else f"ARCH({self.p})"


def _as_tuple(values) -> tuple:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)).ravel()) if values is not None else ()


@dataclass(frozen=True)
class GarchParams:
    """Full parameter vector ``(omega, alpha_1..alpha_p, beta_1..beta_q)``."""

    omega: float
    alpha: tuple = ()
    beta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "alpha", _as_tuple(self.alpha))
        object.__setattr__(self, "beta", _as_tuple(self.beta))

    @property
    def order(self) -> ModelOrder:
        return ModelOrder(len(self.alpha), len(self.beta))

    @property
    def persistence(self) -> float:
        return math.fsum(self.alpha) + math.fsum(self.beta)

    @property
    def dim(self) -> int:
        return 1 + len(self.alpha) + len(self.beta)

    def unconditional_variance(self) -> float:
        s = self.persistence
        if s >= 1.0:
            raise StationarityViolation(f"sum(alpha) + sum(beta) = {s} >= 1: no finite variance")
        return self.omega / (1.0 - s)

    def to_vector(self) -> np.ndarray:
        return np.array((self.omega, *self.alpha, *self.beta), dtype=float)

    @classmethod
    def from_vector(cls, vec, order: ModelOrder) -> "GarchParams":
        vec = np.asarray(vec, dtype=float)
        p, q = order
        return cls(vec[0], vec[1 : 1 + p], vec[1 + p : 1 + p + q])

    def to_vte(self, gamma2: float | None = None) -> "VteParams":
        """Drop omega; ``gamma2`` defaults to the implied unconditional variance."""
        g2 = self.unconditional_variance() if gamma2 is None else gamma2
        return VteParams(self.alpha, self.beta, g2)


@dataclass(frozen=True)
class VteParams:
    """Variance-targeting parameters: ``(alpha, beta)`` plus ``gamma2``."""

    alpha: tuple = ()
    beta: tuple = ()
    gamma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_tuple(self.alpha))
        object.__setattr__(self, "beta", _as_tuple(self.beta))
        object.__setattr__(self, "gamma2", float(self.gamma2))

    @property
    def order(self) -> ModelOrder:
        return ModelOrder(len(self.alpha), len(self.beta))

    @property
    def persistence(self) -> float:
        return math.fsum(self.alpha) + math.fsum(self.beta)

    @property
    def dim(self) -> int:
        return len(self.alpha) + len(self.beta)

    @property
    def omega(self) -> float:
        return self.gamma2 * (1.0 - self.persistence)

    def to_vector(self) -> np.ndarray:
        return np.array((*self.alpha, *self.beta), dtype=float)

    @classmethod
    def from_vector(cls, vec, order: ModelOrder, gamma2: float) -> "VteParams":
        vec = np.asarray(vec, dtype=float)
        p, q = order
        return cls(vec[:p], vec[p : p + q], gamma2)

    def to_full(self) -> GarchParams:
        return GarchParams(self.omega, self.alpha, self.beta)


@dataclass(frozen=True)
class SimOutput:
    returns: np.ndarray
    true_vol2: np.ndarray
    seed: int | None
    params: GarchParams | None = None

    def __post_init__(self):
        for name in ("returns", "true_vol2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.returns)


def validate(params: GarchParams, require_K: bool = False) -> GarchParams:
    """Return ``params`` unchanged if admissible, raise otherwise.

    With ``require_K`` the persistence ``sum(alpha) + sum(beta)`` must also be
    strictly below one.
    """
    if not math.isfinite(params.omega) or params.omega <= 0.0:
        raise NonNegativityViolation(f"omega must be > 0, got {params.omega}")
    for name, coefs in (("alpha", params.alpha), ("beta", params.beta)):
        for i, c in enumerate(coefs):
            if not math.isfinite(c) or c < 0.0:
                raise NonNegativityViolation(f"{name}[{i}] must be >= 0, got {c}")
    if require_K and params.persistence >= 1.0:
        raise StationarityViolation(
            f"sum(alpha) + sum(beta) = {params.persistence} must be < 1"
        )
    return params


def _first_order_coefs(params: GarchParams) -> tuple[float, float]:
    p, q = params.order
    if p != 1 or q > 1:
        raise UnsupportedOrder(f"only ARCH(1) and GARCH(1,1) are supported, got {params.order}")
    return params.alpha[0], (params.beta[0] if q else 0.0)


def fourth_moment_ok(params: GarchParams, kurtosis: float = 3.0) -> bool:
    """Finite fourth moment check: ``(a + b)^2 + (kurtosis - 1) a^2 < 1``."""
    a, b = _first_order_coefs(params)
    return (a + b) ** 2 + (kurtosis - 1.0) * a * a < 1.0


def strict_stationarity_estimate(params: GarchParams, mc_draws: int = 1_000_000, seed: int = 0) -> float:
    """Monte Carlo estimate of ``E[log(alpha Z^2 + beta)]`` for Gaussian ``Z``.

    A negative value means the GARCH(1,1)/ARCH(1) recursion has a strictly
    stationary solution.
    """
    a, b = _first_order_coefs(params)
    if mc_draws < 10_000:
        raise ValueError("mc_draws must be at least 10_000")
    if a == 0.0:
        return math.log(b) if b > 0.0 else -math.inf
    z = np.random.default_rng(seed).standard_normal(mc_draws)
    return float(np.mean(np.log(a * z * z + b)))


def simulate(params: GarchParams, n: int, burn_in: int = 1000, seed: int | None = None) -> SimOutput:
    """Simulate ``n`` observations after discarding ``burn_in`` warm-up steps.

    The recursion starts from the unconditional variance. Output is
    deterministic for a given seed.
    """
    validate(params)
    if params.persistence >= 1.0:
        raise StationarityViolation("explosive parameters cannot be simulated")
    if n < 1:
        raise ValueError("n must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    rng = np.random.default_rng(seed)
    total = n + burn_in
    z = rng.standard_normal(total)
    x = np.empty(total)
    v = np.empty(total)
    kernels.simulate_path(
        z,
        params.omega,
        np.asarray(params.alpha, dtype=float),
        np.asarray(params.beta, dtype=float),
        params.unconditional_variance(),
        x,
        v,
    )
    return SimOutput(x[burn_in:].copy(), v[burn_in:].copy(), seed, params)


def random_coefficients(order: ModelOrder, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw of ``(alpha, beta)`` conditioned on a sum below one."""
    d = order.p + order.q
    while True:
        c = rng.uniform(0.0, 1.0, size=d)
        if c.sum() < 1.0:
            return c


def random_params(order: ModelOrder | Sequence[int], seed: int | None = None) -> GarchParams:
    """Random parameters: ``omega = U * 10**-tau``, ``tau`` uniform on 1..8."""
    order = ModelOrder.checked(*order)
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random()  # (0, 1]
    tau = int(rng.integers(1, 9))
    c = random_coefficients(order, rng)
    params = GarchParams(u * 10.0 ** (-tau), c[: order.p], c[order.p :])
    return validate(params, require_K=True)
