"""Hedge ratios of the benchmarked integral moment E[I / Y_T^alpha].

Write the moment as E(y) = y^-m h1^(nu/2) h3 f1(y) where only h1, h3 and
the Kummer argument z carry y.  Differentiating gives three groups: the
log-derivative of the prefactor, the derivative of 1F1 through z, and the
z-derivative of the parameter-derivative block G1/2 + H1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import specfun
from .exceptions import DomainError
from .pricing import LN2, PricingInputs, _kernel, benchmarked_integral_moment
from .process import ProcState, avg_growth
from .specfun import LogScaled

__all__ = [
    "GreeksReport",
    "delta_dy",
    "vega",
    "vega_paper_coefficient",
    "delta_dF",
    "fd_delta_dy",
    "fd_vega",
    "fd_delta_dF",
    "greeks_report",
    "FLAG_THRESHOLD",
]

FLAG_THRESHOLD = 1e-4


def _with_y(inputs: PricingInputs, y: float) -> PricingInputs:
    return replace(inputs, state=ProcState(inputs.state.t, y))


def _delta_pieces(inputs: PricingInputs, T: float):
    y = inputs.state.y
    k = _kernel(inputs.params, y, inputs.tau(T), inputs.alpha, 0.0)
    beta, nu, z = k.beta, k.nu, k.z
    F = specfun.hyp1f1_log(beta, 1 + nu, z)
    G1, H1 = specfun.hyp1f1_param_derivs(beta, 1 + nu, z)
    bracket = (2 * LN2 + k.log_h2 - k.log_h1 - specfun.digamma(beta)
               + 2 * specfun.digamma(1 + nu))
    # common = y^-m h1^(nu/2) h3 2^(-nu-1) h4 h2^p Gamma(beta)/Gamma(1+nu)
    common = LogScaled(1, k.log_pre - LN2 + math.log(k.h4))
    return k, F, G1, H1, bracket, common


def delta_dy(inputs: PricingInputs, T: float) -> float:
    """dE[I / Y_T^alpha]/dy in closed form.

    The terms are those of the textbook differentiation of the expansion
    used by :func:`~threehalves.pricing.benchmarked_integral_moment`; every
    block carries the 2^(-nu-1) factor and the chain factor dz/dy = z/y.
    """
    y = inputs.state.y
    k, F, G1, H1, bracket, common = _delta_pieces(inputs, T)
    beta, nu, z = k.beta, k.nu, k.z
    dz_dy = z / y
    # f1 / (prefactor)
    f1 = common * specfun.log_sum([F * bracket, -(G1 + H1 * 2.0)])
    # y d/dy log(y^-m h1^(nu/2) h3) = -m + nu/2 - z
    line1 = f1 * ((-inputs.params.m + nu / 2 - z) / y)
    dF = specfun.hyp1f1_log(beta + 1, 2 + nu, z) * (beta / (1 + nu) * dz_dy)
    dG, dH = specfun.hyp1f1_mixed_dz(beta, 1 + nu, z)
    line2 = common * specfun.log_sum([
        dF * bracket,
        F * (-1.0 / y),
        -((dG + dH * 2.0) * dz_dy),
    ])
    return specfun.log_sum([line1, line2]).to_real()


def _delta_dy_printed(inputs: PricingInputs, T: float) -> float:
    """Term-by-term transcription of the published delta expression.

    Differs from :func:`delta_dy` in that the 1F1(beta+1, ...) line and the
    correction block lack the 2^(-nu-1) factor, that line and the last G and
    H sums lack dz/dy, and psi(1 + nu_hat) enters with weight 1 instead of 2.
    Retained as evidence only; it fails the finite-difference gate.
    """
    y = inputs.state.y
    p = inputs.params
    k = _kernel(p, y, inputs.tau(T), inputs.alpha, 0.0)
    beta, nu, z = k.beta, k.nu, k.z
    b, g = p.b, p.gamma
    em1 = math.expm1(b * inputs.tau(T))
    F = specfun.hyp1f1_log(beta, 1 + nu, z)
    G1, H1 = specfun.hyp1f1_param_derivs(beta, 1 + nu, z)
    s = specfun._ag_sums(beta, 1 + nu, z, specfun.DEFAULT_CTRL, with_dz=True)
    printed_bracket = (2 * LN2 + k.log_h2 - k.log_h1 - specfun.digamma(beta)
                       + specfun.digamma(1 + nu))
    # y^-m h1^(nu/2) h3 h2^p h4 Gamma/Gamma, without any power of two
    base = LogScaled(1, k.log_pre + nu * LN2 + math.log(k.h4))
    f1 = base * LogScaled(1, -(nu + 1) * LN2) * specfun.log_sum(
        [F * printed_bracket, -(G1 + H1 * 2.0)]
    )
    line1 = f1 * ((-p.m + nu / 2 - z) / y)
    line2 = base * specfun.hyp1f1_log(beta + 1, 2 + nu, z) * (beta / (1 + nu) * printed_bracket)
    line3 = base * F * (-1.0 / y)
    sums = specfun.log_sum([
        s["G0"] * (b / (2 * g * em1 * (1 + nu))),
        s["G1"] * (b * b * y / (2 * g * g * (1 + nu) * em1 ** 2)),
        s["G2"] * (b * y / (2 * g * (1 + nu) * em1)),
        s["H0"] * (-b * beta / ((1 + nu) ** 2 * em1 * g)),
        s["H1"] * (-b * b * beta * y / ((1 + nu) ** 2 * em1 ** 2 * g * g)),
        s["H2"] * (-b * beta * y / (g * (1 + nu) ** 2 * em1)),
    ])
    line4 = -(base * sums * 2.0)
    return specfun.log_sum([line1, line2, line3, line4]).to_real()


def vega(inputs: PricingInputs, T: float) -> float:
    """dE/dsigma with sigma = sqrt(2 gamma / y).

    By the chain rule dE/dsigma = -sqrt(2/gamma) y^(3/2) dE/dy.
    """
    return _vega_from_delta(inputs, delta_dy(inputs, T))


def _vega_from_delta(inputs, d_dy):
    return -math.sqrt(2 / inputs.params.gamma) * inputs.state.y ** 1.5 * d_dy


def vega_paper_coefficient(inputs: PricingInputs, T: float, d_dy: float | None = None) -> float:
    """Vega with the published coefficient -sqrt(2 gamma) y^(3/2).

    Matches :func:`vega` only when gamma = 1.
    """
    if d_dy is None:
        d_dy = delta_dy(inputs, T)
    return -math.sqrt(2 * inputs.params.gamma) * inputs.state.y ** 1.5 * d_dy


def delta_dF(inputs: PricingInputs, T: float, d_dy: float | None = None) -> float:
    """Sensitivity to the index level: dE/dF_t = (dE/dy) / (alpha_tilde e^{eta t})."""
    if d_dy is None:
        d_dy = delta_dy(inputs, T)
    return d_dy / avg_growth(inputs.params, inputs.state.t)


def _richardson_central(f, x, h):
    def d(step):
        return (f(x + step) - f(x - step)) / (2 * step)

    return (4 * d(h / 2) - d(h)) / 3


def fd_delta_dy(inputs: PricingInputs, T: float, rel_step: float = 1e-5) -> float:
    """Richardson-extrapolated central difference of the moment in y."""
    y = inputs.state.y
    return _richardson_central(
        lambda v: benchmarked_integral_moment(_with_y(inputs, v), T), y, rel_step * y
    )


def fd_vega(inputs: PricingInputs, T: float, rel_step: float = 1e-5) -> float:
    """Central difference in sigma, repricing at y = 2 gamma / sigma^2."""
    g = inputs.params.gamma
    sigma = math.sqrt(2 * g / inputs.state.y)
    return _richardson_central(
        lambda s: benchmarked_integral_moment(_with_y(inputs, 2 * g / (s * s)), T),
        sigma, rel_step * sigma,
    )


def fd_delta_dF(inputs: PricingInputs, T: float, rel_step: float = 1e-5) -> float:
    """Central difference in the index level F_t, repricing at y = F_t / A_t."""
    A = avg_growth(inputs.params, inputs.state.t)
    F = A * inputs.state.y
    return _richardson_central(
        lambda f: benchmarked_integral_moment(_with_y(inputs, f / A), T), F, rel_step * F
    )


@dataclass(frozen=True)
class GreeksReport:
    """Analytic greeks with their finite-difference check.

    ``vega`` is the chain-rule value; ``vega_paper`` uses the published
    coefficient.  ``flagged`` is set when ``rel_gap`` exceeds 1e-4.
    """

    d_dy: float
    d_dF: float
    vega: float
    vega_paper: float
    fd_d_dy: float
    rel_gap: float
    flagged: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def greeks_report(inputs: PricingInputs, T: float) -> GreeksReport:
    if T <= inputs.state.t:
        raise DomainError("T must exceed the current time")
    d = delta_dy(inputs, T)
    fd = fd_delta_dy(inputs, T)
    gap = abs(d - fd) / abs(fd) if fd != 0 else abs(d)
    return GreeksReport(
        d_dy=d,
        d_dF=delta_dF(inputs, T, d),
        vega=_vega_from_delta(inputs, d),
        vega_paper=vega_paper_coefficient(inputs, T, d),
        fd_d_dy=fd,
        rel_gap=gap,
        flagged=gap > FLAG_THRESHOLD,
    )
