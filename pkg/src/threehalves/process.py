"""Square-root process Y, its squared Bessel representation, and model scaffolding.

Under the real-world measure the normalized index Y_t = F_t / (alpha_tilde e^{eta t})
follows

    dY = (a1 - b Y) dt + sqrt(2 gamma Y) dW,

and X_{phi(t)} = e^{bt} Y_t is a squared Bessel process of dimension
delta = 2 a1 / gamma run on the clock phi(t) = gamma (e^{bt} - 1) / (2b).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import specfun
from .exceptions import ConstraintViolation, ConvergenceError, DomainError, InfiniteMoment

__all__ = [
    "ModelParams",
    "ProcState",
    "avg_growth",
    "time_change",
    "sqb_transition_density",
    "sqb_moment",
    "cir_transition_density",
    "cir_mean",
    "cir_variance",
    "stationary_density",
    "unit_mean_gamma_density",
    "volatility_from_y",
    "squared_volatility",
    "market_price_of_risk",
    "PAPER_PARAMS",
]


@dataclass(frozen=True)
class ModelParams:
    """Real-world model parameters.

    Parameters
    ----------
    alpha_tilde : float
        Scale of the deterministic trend A_t = alpha_tilde * exp(eta t).
    eta : float
        Net growth rate of the index, per year.
    a1 : float
        Drift constant of Y.
    b : float
        Mean-reversion speed of Y.
    gamma : float
        Diffusion scale; Y has diffusion coefficient sqrt(2 gamma Y).

    Raises
    ------
    ConstraintViolation
        If delta = 2 a1 / gamma <= 2, eta < b, or a1 < 2 gamma.
    """

    alpha_tilde: float
    eta: float
    a1: float
    b: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha_tilde", "a1", "b", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConstraintViolation(f"{name} > 0", f"{name}={v!r}")
        if not math.isfinite(self.eta):
            raise ConstraintViolation("eta finite", f"eta={self.eta!r}")
        if not self.delta > 2:
            raise ConstraintViolation("delta = 2*a1/gamma > 2", f"delta={self.delta!r}")
        if self.eta < self.b:
            raise ConstraintViolation("eta >= b", f"eta={self.eta!r}, b={self.b!r}")
        if self.a1 < 2 * self.gamma:
            raise ConstraintViolation("a1 >= 2*gamma", f"a1={self.a1!r}, 2*gamma={2 * self.gamma!r}")

    @property
    def delta(self) -> float:
        """Dimension of the squared Bessel process."""
        return 2 * self.a1 / self.gamma

    @property
    def nu_hat(self) -> float:
        """Bessel index a1/gamma - 1."""
        return self.a1 / self.gamma - 1

    @property
    def m(self) -> float:
        return 0.5 * self.nu_hat

    @property
    def long_run_mean(self) -> float:
        return self.a1 / self.b

    def as_dict(self) -> dict:
        return {"alpha_tilde": self.alpha_tilde, "eta": self.eta, "a1": self.a1,
                "b": self.b, "gamma": self.gamma}


# Parameter set fitted to the S&P 500 total return index, 1920-2010.
PAPER_PARAMS = ModelParams(alpha_tilde=0.248, eta=0.1028, a1=0.1028, b=0.1028, gamma=0.0137)


@dataclass(frozen=True)
class ProcState:
    """Calendar time ``t`` (years) and current value ``y`` of Y."""

    t: float
    y: float

    def __post_init__(self):
        if not self.t >= 0:
            raise DomainError(f"t must be >= 0, got {self.t!r}")
        if not (self.y > 0 and math.isfinite(self.y)):
            raise DomainError(f"y must be positive and finite, got {self.y!r}")


def _require_pos(name, v):
    if not v > 0:
        raise DomainError(f"{name} must be > 0, got {v!r}")


def avg_growth(params: ModelParams, t: float) -> float:
    """Deterministic trend A_t = alpha_tilde * exp(eta t)."""
    if t < 0:
        raise DomainError("t must be >= 0")
    return params.alpha_tilde * math.exp(params.eta * t)


def time_change(params: ModelParams, t: float) -> float:
    """Squared Bessel clock phi(t) = gamma (e^{bt} - 1) / (2b)."""
    if t < 0:
        raise DomainError("t must be >= 0")
    return params.gamma * math.expm1(params.b * t) / (2 * params.b)


def sqb_transition_density(delta: float, phi_s: float, x_s: float, phi_t: float, x_t: float) -> float:
    """Transition density of a squared Bessel process of dimension ``delta``.

    Density of X at clock value ``phi_t`` evaluated at ``x_t``, given
    X = ``x_s`` at clock value ``phi_s``.
    """
    if not delta > 2:
        raise DomainError("delta must exceed 2")
    if not (phi_t > phi_s >= 0):
        raise DomainError("require phi_t > phi_s >= 0")
    _require_pos("x_s", x_s)
    if x_t < 0:
        raise DomainError("x_t must be >= 0")
    if x_t == 0:
        return 0.0
    dt = phi_t - phi_s
    nu = delta / 2 - 1
    arg = math.sqrt(x_s * x_t) / dt
    log_p = (-math.log(2 * dt) + 0.5 * nu * math.log(x_t / x_s)
             - (x_s + x_t) / (2 * dt) + specfun.bessel_i_log(nu, arg).log_mag)
    return math.exp(log_p)


def sqb_moment(delta: float, x0: float, phi: float, beta_tilde: float,
               ctrl: specfun.HypSeriesCtrl = specfun.DEFAULT_CTRL) -> float:
    """E[X_phi^beta_tilde] for a squared Bessel process started at ``x0``.

    Sums (2 phi)^beta e^{-w} sum_k w^k Gamma(beta + k + delta/2) / (k! Gamma(k + delta/2))
    with w = x0 / (2 phi) term by term in log space.  This series is kept
    separate from the hypergeometric routines so that it serves as an
    independent route to the bond price.

    Raises
    ------
    InfiniteMoment
        If ``beta_tilde <= -delta/2``.
    ConvergenceError
        If the series has not settled within the term budget.
    """
    if not delta > 0:
        raise DomainError("delta must be > 0")
    _require_pos("x0", x0)
    _require_pos("phi", phi)
    if beta_tilde <= -delta / 2:
        raise InfiniteMoment(
            f"moment of order {beta_tilde!r} is infinite for dimension {delta!r}"
        )
    if beta_tilde == 0:
        return 1.0
    w = x0 / (2 * phi)
    c = delta / 2
    # the terms peak near k = w; allow the budget to cover the bulk of that mass
    budget = max(ctrl.max_terms, int(w + 60 * math.sqrt(w) + 100))
    n = 256
    while True:
        k = np.arange(n, dtype=float)
        logs = (k * math.log(w) - special.gammaln(k + 1)
                + special.gammaln(beta_tilde + k + c) - special.gammaln(k + c))
        top = float(logs.max())
        tail = logs[-ctrl.consecutive_small:]
        settled = (n > w and np.all(np.diff(logs[-ctrl.consecutive_small - 1:]) < 0)
                   and np.all(tail - top < math.log(ctrl.rel_tol) - math.log(n)))
        if settled:
            break
        if n >= budget:
            raise ConvergenceError(f"moment series did not settle within {budget} terms")
        n = min(2 * n, budget)
    log_sum = top + math.log(math.fsum(np.exp(logs - top).tolist()))
    return math.exp(beta_tilde * math.log(2 * phi) - w + log_sum)


def cir_transition_density(params: ModelParams, T: float, y: float, z: float) -> float:
    """Density of Y_T at ``z`` given Y_0 = ``y`` (closed form in y-coordinates)."""
    _require_pos("T", T)
    _require_pos("y", y)
    _require_pos("z", z)
    b, g, a1 = params.b, params.gamma, params.a1
    nu = params.nu_hat
    half = 0.5 * b * T
    sh = math.sinh(half)
    coth = 1.0 / math.tanh(half)
    log_p = (math.log(b / (2 * g * sh))
             + (a1 / (2 * g) - 0.5) * math.log(z / y)
             + b / (2 * g) * (a1 * T + (y - z) - (y + z) * coth)
             + specfun.bessel_i_log(nu, b * math.sqrt(y * z) / (g * sh)).log_mag)
    return math.exp(log_p)


def cir_mean(params: ModelParams, y: float, T: float) -> float:
    """E[Y_T | Y_0 = y]."""
    e = math.exp(-params.b * T)
    return y * e + params.long_run_mean * (1 - e)


def cir_variance(params: ModelParams, y: float, T: float) -> float:
    """Var[Y_T | Y_0 = y] for diffusion coefficient sqrt(2 gamma Y)."""
    b, s2 = params.b, 2 * params.gamma
    e = math.exp(-b * T)
    return y * s2 * e * (1 - e) / b + params.a1 * s2 * (1 - e) ** 2 / (2 * b * b)


def unit_mean_gamma_density(delta: float, y: float) -> float:
    """Gamma density with shape = rate = delta/2 (unit mean).

    This is the stationary law of the normalized index when a1 = b.
    """
    _require_pos("y", y)
    c = delta / 2
    return math.exp(c * math.log(c) + (c - 1) * math.log(y) - c * y - specfun.ln_gamma(c))


def stationary_density(params: ModelParams, y: float) -> float:
    """Stationary density of Y: gamma with shape a1/gamma and rate b/gamma.

    Reduces to :func:`unit_mean_gamma_density` when a1 = b.
    """
    _require_pos("y", y)
    if params.a1 == params.b:
        return unit_mean_gamma_density(params.delta, y)
    k = params.a1 / params.gamma
    r = params.b / params.gamma
    return math.exp(k * math.log(r) + (k - 1) * math.log(y) - r * y - specfun.ln_gamma(k))


def volatility_from_y(params: ModelParams, y: float) -> float:
    """Index volatility sigma = sqrt(2 gamma / y)."""
    _require_pos("y", y)
    return math.sqrt(2 * params.gamma / y)


def squared_volatility(params: ModelParams, y: float) -> float:
    """v = sigma^2 = 2 gamma / y."""
    _require_pos("y", y)
    return 2 * params.gamma / y


def market_price_of_risk(params: ModelParams, y: float) -> float:
    """theta = ((eta - b) sqrt(y) + a1 / sqrt(y)) / sqrt(2 gamma)."""
    _require_pos("y", y)
    r = math.sqrt(y)
    return ((params.eta - params.b) * r + params.a1 / r) / math.sqrt(2 * params.gamma)
