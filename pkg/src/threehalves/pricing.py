"""Closed-form real-world prices under the 3/2 model.

All expectations are conditional on Y_t = y and are time homogeneous, so
the formulas only see the remaining horizon tau = T - t.  Interest rates
are zero throughout.

The central object is the joint Laplace functional

    L(mu) = E[exp(-mu I) / Y_T^alpha],   I = int_t^T ds / Y_s,

whose negative mu-derivative at 0 is the benchmarked integral moment
E[I / Y_T^alpha] that prices the floating leg of a variance swap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from . import specfun
from .exceptions import DomainConditionError, DomainError
from .process import ModelParams, ProcState, avg_growth, time_change
from .specfun import LogScaled

__all__ = [
    "SwapContract",
    "PricingInputs",
    "BondQuote",
    "inverse_moment",
    "zcb_price",
    "laplace_functional",
    "benchmarked_integral_moment",
    "central_fd_mu1",
    "benchmarked_variance_expectation",
    "fair_strike",
    "swap_value",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class SwapContract:
    """Variance swap terms.

    Parameters
    ----------
    notional_L : float
        Currency per variance point.
    strike_Kv : float
        Annualized variance strike.
    maturity_T : float
        Maturity in years.
    trading_days_N : int
        Annualization factor for discretely sampled variance.
    """

    notional_L: float
    strike_Kv: float
    maturity_T: float
    trading_days_N: int = 252

    def __post_init__(self):
        if not self.notional_L > 0:
            raise DomainError("notional_L must be > 0")
        if not self.strike_Kv >= 0:
            raise DomainError("strike_Kv must be >= 0")
        if not self.maturity_T > 0:
            raise DomainError("maturity_T must be > 0")
        if not (int(self.trading_days_N) == self.trading_days_N and self.trading_days_N > 0):
            raise DomainError("trading_days_N must be a positive integer")


@dataclass(frozen=True)
class PricingInputs:
    """Model, current state and the payoff exponent ``alpha``.

    The exponent must satisfy beta_hat = 1 + nu_hat - alpha > 0, otherwise
    E[Y_T^-alpha] is infinite.
    """

    params: ModelParams
    state: ProcState
    alpha: float = 1.0

    def __post_init__(self):
        if not self.beta_hat > 0:
            raise DomainConditionError(
                f"beta_hat = 1 + nu_hat - alpha = {self.beta_hat!r} must be > 0"
            )

    @property
    def beta_hat(self) -> float:
        return 1 + self.params.nu_hat - self.alpha

    def tau(self, T: float) -> float:
        tau = T - self.state.t
        if not tau > 0:
            raise DomainError(f"maturity {T!r} must exceed current time {self.state.t!r}")
        return tau


class BondQuote(NamedTuple):
    """Zero-coupon bond price and its benchmarked value P / F_t."""

    price: float
    benchmarked: float


@dataclass(frozen=True)
class _Kernel:
    """Maturity-dependent building blocks shared by L, its mu-derivative and delta."""

    z: float
    log_h1: float
    log_h2: float
    log_h3: float
    h4: float
    nu: float
    beta: float
    log_pre: float  # log of 2^-nu y^-m h3 h2^p h1^(nu/2) Gamma(beta)/Gamma(1+nu)


def _kernel(params: ModelParams, y: float, tau: float, alpha: float, mu1: float = 0.0) -> _Kernel:
    b, g = params.b, params.gamma
    m = params.m
    nu = math.sqrt((params.a1 - g) ** 2 + 4 * mu1 * g) / g
    beta = 1 + m - alpha + nu / 2
    if not beta > 0:
        raise DomainConditionError(f"beta = {beta!r} must be > 0")
    em1 = math.expm1(b * tau)
    z = b * y / (g * em1)
    log_h1 = 2 * math.log(b) + math.log(y) - 2 * math.log(g) - 2 * math.log(math.sinh(b * tau / 2))
    log_h2 = math.log(b) + b * tau - math.log(em1) - math.log(g)
    log_h3 = -z + b * m * tau
    log_pre = (-nu * LN2 - m * math.log(y) + log_h3 + (-m + alpha - nu / 2) * log_h2
               + 0.5 * nu * log_h1 + specfun.ln_gamma(beta) - specfun.ln_gamma(1 + nu))
    return _Kernel(z=z, log_h1=log_h1, log_h2=log_h2, log_h3=log_h3,
                   h4=2 / (g * params.nu_hat), nu=nu, beta=beta, log_pre=log_pre)


def inverse_moment(params: ModelParams, y: float, tau: float) -> float:
    """E[1 / Y_{t+tau} | Y_t = y] via the X-coordinate bond formula.

    With x = e^{bt} y and dphi = phi(t + tau) - phi(t), written for t = 0:
    e^{b tau} (2 dphi)^-1 e^{-w} Gamma(a1/gamma - 1)/Gamma(a1/gamma)
    1F1(a1/gamma - 1; a1/gamma; w), w = y / (2 dphi).
    """
    if not tau > 0:
        raise DomainError("tau must be > 0")
    k = params.a1 / params.gamma
    dphi = time_change(params, tau)
    w = y / (2 * dphi)
    log_v = (params.b * tau - math.log(2 * dphi) - w + specfun.ln_gamma(k - 1)
             - specfun.ln_gamma(k) + specfun.hyp1f1_log(k - 1, k, w).log_mag)
    return math.exp(log_v)


def zcb_price(params: ModelParams, state: ProcState, T: float) -> BondQuote:
    """Fair zero-coupon bond price P_T(t, F_t) = F_t E[1/F_T].

    Returns a :class:`BondQuote` with the price and the benchmarked price
    P / F_t = E[1/F_T].  Since F_t = A_t y, the price equals
    y e^{-eta (T-t)} E[1/Y_T] and lies in (0, 1] when eta >= b and a1 >= 2 gamma.
    """
    tau = T - state.t
    if tau < 0:
        raise DomainError("T must be >= state.t")
    F_t = avg_growth(params, state.t) * state.y
    if tau == 0:
        return BondQuote(1.0, 1.0 / F_t)
    bench = inverse_moment(params, state.y, tau) / avg_growth(params, T)
    return BondQuote(F_t * bench, bench)


def laplace_functional(inputs: PricingInputs, T: float, mu1: float = 0.0) -> LogScaled:
    """E[exp(-mu1 int_t^T ds/Y_s) Y_T^-alpha], log-scaled.

    Raises
    ------
    DomainConditionError
        If beta(mu1) = 1 + m - alpha + nu/2 <= 0.
    """
    if mu1 < 0:
        raise DomainError("mu1 must be >= 0")
    k = _kernel(inputs.params, inputs.state.y, inputs.tau(T), inputs.alpha, mu1)
    F = specfun.hyp1f1_log(k.beta, 1 + k.nu, k.z)
    return LogScaled(1, k.log_pre) * F


def _integral_moment_terms(inputs: PricingInputs, T: float, psi_weight: float = 1.0):
    """The six additive pieces of E[I / Y_T^alpha] at mu1 = 0.

    ``psi_weight`` multiplies the psi(1 + nu_hat) term; 1 is the true
    derivative, 1/2 reproduces the variant with the halved digamma term.
    """
    k = _kernel(inputs.params, inputs.state.y, inputs.tau(T), inputs.alpha, 0.0)
    F = specfun.hyp1f1_log(k.beta, 1 + k.nu, k.z)
    G1, H1 = specfun.hyp1f1_param_derivs(k.beta, 1 + k.nu, k.z)
    pre = LogScaled(1, k.log_pre + math.log(k.h4))  # everything except 1F1
    f = pre * F
    return [
        f * LN2,
        f * (0.5 * k.log_h2),
        f * (-0.5 * k.log_h1),
        f * (-0.5 * specfun.digamma(k.beta)),
        f * (psi_weight * specfun.digamma(1 + k.nu)),
        -(pre * (G1 * 0.5 + H1)),
    ]


def benchmarked_integral_moment(inputs: PricingInputs, T: float) -> float:
    """E[(int_t^T ds/Y_s) / Y_T^alpha] in closed form.

    Differentiating the Laplace functional in mu1 through nu(mu1) gives
    h4 f [ln 2 + ln(h2)/2 - ln(h1)/2 - psi(beta)/2 + psi(1+nu)
    - (G1/2 + H1)/1F1], with f = L(0) and h4 = dnu/dmu1 = 2/(gamma nu_hat).
    The six pieces are combined with a signed log-sum-exp.
    """
    return specfun.log_sum(_integral_moment_terms(inputs, T)).to_real()


def _integral_moment_halved_psi(inputs: PricingInputs, T: float) -> float:
    """Same expansion with the psi(1 + nu_hat) term carrying a factor 1/2.

    Kept only to document that this variant is not the mu1-derivative.
    """
    return specfun.log_sum(_integral_moment_terms(inputs, T, psi_weight=0.5)).to_real()


def central_fd_mu1(inputs: PricingInputs, T: float, h: float = 1e-4, richardson: bool = True) -> float:
    """-dL/dmu1 at 0 by the one-sided second-order stencil.

    With ``richardson`` the stencil is evaluated at h and h/2 and the
    leading O(h^2) error is eliminated.
    """
    if not h > 0:
        raise DomainError("h must be > 0")

    def f(mu):
        return laplace_functional(inputs, T, mu).to_real()

    f0 = f(0.0)

    def stencil(step):
        return -(-3 * f0 + 4 * f(step) - f(2 * step)) / (2 * step)

    d_h = stencil(h)
    if not richardson:
        return d_h
    return (4 * stencil(h / 2) - d_h) / 3


def benchmarked_variance_expectation(params: ModelParams, state: ProcState, T: float) -> float:
    """E[sigma^2_{t,T} / F_T] for the continuously sampled annualized variance.

    Equals 2 gamma e^{-eta T} / (alpha_tilde tau) * E[I / Y_T].
    """
    inputs = PricingInputs(params, state, 1.0)
    tau = inputs.tau(T)
    pref = 2 * params.gamma * math.exp(-params.eta * T) / (params.alpha_tilde * tau)
    return pref * benchmarked_integral_moment(inputs, T)


def fair_strike(params: ModelParams, state: ProcState, T: float) -> float:
    """Variance swap rate K_v = (2 gamma / tau) E[I / Y_T] / E[1 / Y_T].

    alpha_tilde and eta cancel, so only (a1, b, gamma, y, tau) matter.
    """
    inputs = PricingInputs(params, state, 1.0)
    tau = inputs.tau(T)
    num = benchmarked_integral_moment(inputs, T)
    den = laplace_functional(inputs, T, 0.0).to_real()
    return 2 * params.gamma / tau * num / den


def swap_value(params: ModelParams, state: ProcState, contract: SwapContract) -> float:
    """Inception value L F_t E[sigma^2 / F_T] - L K_v P_T(t, F_t)."""
    T = state.t + contract.maturity_T
    F_t = avg_growth(params, state.t) * state.y
    float_leg = F_t * benchmarked_variance_expectation(params, state, T)
    bond = zcb_price(params, state, T).price
    return contract.notional_L * (float_leg - contract.strike_Kv * bond)
