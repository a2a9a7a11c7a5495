"""Parameter estimation from an index price series.

Steps: regress ln F on time for the growth rate eta, rescale so that the
normalized index Y_t = F_t / (alpha_tilde e^{eta t}) has sample mean one,
fit the unit-mean gamma law of Y by maximum likelihood for the dimension
delta, and finally set b = eta, a1 = b, gamma = 2 a1 / delta.

The series is taken to be a total-return index already expressed in units
of the savings account; no discounting is applied here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize, special

from .exceptions import ConstraintViolation, ConvergenceError, DataError
from .process import ModelParams

__all__ = [
    "PriceSeries",
    "LogLinearFit",
    "GammaFit",
    "CalibrationResult",
    "fit_log_linear",
    "normalize_index",
    "fit_gamma_dimension",
    "assemble_params",
    "calibrate",
    "DELTA_BOUNDS",
]

DELTA_BOUNDS = (2.0, 200.0)


@dataclass(frozen=True)
class PriceSeries:
    """Index closes at strictly increasing times (years from the first observation)."""

    times: np.ndarray
    closes: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        c = np.asarray(self.closes, dtype=float)
        if t.ndim != 1 or c.ndim != 1 or t.size != c.size:
            raise DataError("times and closes must be 1-d arrays of equal length")
        if t.size < 2:
            raise DataError("a price series needs at least two observations")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(c)):
            raise DataError("times and closes must be finite")
        if np.any(np.diff(t) <= 0):
            raise DataError("times must be strictly increasing")
        if np.any(c <= 0):
            i = int(np.flatnonzero(c <= 0)[0])
            raise DataError(f"close at position {i} is not positive: {c[i]!r}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "closes", c)

    def __len__(self):
        return self.times.size


class LogLinearFit(NamedTuple):
    """OLS fit of ln F_t = eta t + c.

    ``alpha_tilde`` follows the mean-of-Y rule; ``alpha_tilde_intercept``
    is the naive exp(c) reported for comparison.
    """

    eta: float
    alpha_tilde: float
    intercept: float
    alpha_tilde_intercept: float


def fit_log_linear(series: PriceSeries, target_mean: float = 1.0) -> LogLinearFit:
    """Estimate eta by least squares and alpha_tilde by matching mean(Y) to ``target_mean``."""
    if len(series) < 3:
        raise DataError("fit_log_linear needs at least 3 observations")
    t = series.times
    lf = np.log(series.closes)
    tc = t - t.mean()
    sxx = float(np.dot(tc, tc))
    if sxx == 0:
        raise DataError("degenerate series: all times equal")
    eta = float(np.dot(tc, lf - lf.mean()) / sxx)
    intercept = float(lf.mean() - eta * t.mean())
    alpha = float(np.mean(series.closes * np.exp(-eta * t))) / target_mean
    return LogLinearFit(eta, alpha, intercept, math.exp(intercept))


def normalize_index(series: PriceSeries, eta: float, alpha_tilde: float) -> np.ndarray:
    """Y_t = F_t / (alpha_tilde e^{eta t})."""
    return series.closes / (alpha_tilde * np.exp(eta * series.times))


class GammaFit(NamedTuple):
    delta_mle: float
    delta_mm: float
    degenerate: bool
    at_bound: bool


def _neg_loglik(delta, n, sum_log, sum_y):
    c = delta / 2
    return -(n * (c * math.log(c) - special.gammaln(c)) + (c - 1) * sum_log - c * sum_y)


def fit_gamma_dimension(residuals, bounds=DELTA_BOUNDS) -> GammaFit:
    """Fit the unit-mean gamma law (shape = rate = delta/2) to ``residuals``.

    Returns the maximum-likelihood dimension, searched on ``bounds``, and the
    method-of-moments value 2 / var(Y).  Zero-variance input is flagged as
    degenerate and mapped to the upper bound.
    """
    y = np.asarray(residuals, dtype=float)
    if y.ndim != 1 or y.size < 100:
        raise DataError("fit_gamma_dimension needs at least 100 residuals")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise DataError("residuals must be positive and finite")
    var = float(np.var(y, ddof=1))
    hi = bounds[1]
    if var <= 1e-14 * float(np.mean(y)) ** 2:
        return GammaFit(hi, math.inf, True, True)
    delta_mm = 2.0 / var
    n = y.size
    sum_log = math.fsum(np.log(y).tolist())
    sum_y = math.fsum(y.tolist())
    res = optimize.minimize_scalar(
        _neg_loglik, bounds=bounds, method="bounded",
        args=(n, sum_log, sum_y), options={"xatol": 1e-9, "maxiter": 500},
    )
    if not res.success:
        raise ConvergenceError(f"gamma dimension search failed: {res.message}")
    d = float(res.x)
    at_bound = d > hi - 1e-6 or d < bounds[0] + 1e-6
    return GammaFit(d, delta_mm, False, at_bound)


@dataclass(frozen=True)
class CalibrationResult:
    alpha_tilde: float
    eta: float
    b: float
    a1: float
    gamma: float
    delta_hat: float
    residual_series: np.ndarray = field(default=None, repr=False, compare=False)
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.alpha_tilde, self.eta, self.a1, self.b, self.gamma)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("alpha_tilde", "eta", "b", "a1", "gamma", "delta_hat")}
        out.update(self.extras)
        return out


def assemble_params(eta: float, alpha_tilde: float, delta_hat: float,
                    residual_series=None, extras=None) -> CalibrationResult:
    """Apply b = eta, a1 = b, gamma = 2 a1 / delta_hat and validate.

    Raises
    ------
    ConstraintViolation
        If the result breaks delta > 2, a1 >= 2 gamma or positivity.
    """
    if not delta_hat > 2:
        raise ConstraintViolation("delta = 2*a1/gamma > 2", f"delta_hat={delta_hat!r}")
    b = eta
    a1 = b
    gamma = 2 * a1 / delta_hat
    # the constructor checks every inequality and names the one that fails
    ModelParams(alpha_tilde, eta, a1, b, gamma)
    return CalibrationResult(alpha_tilde, eta, b, a1, gamma, delta_hat,
                             residual_series, dict(extras or {}))


def calibrate(series: PriceSeries) -> CalibrationResult:
    """Full pipeline: log-linear trend, normalization, gamma fit, assembly."""
    lin = fit_log_linear(series)
    y = normalize_index(series, lin.eta, lin.alpha_tilde)
    gf = fit_gamma_dimension(y)
    extras = {"intercept": lin.intercept, "alpha_tilde_intercept": lin.alpha_tilde_intercept,
              "delta_mm": gf.delta_mm, "delta_degenerate": gf.degenerate,
              "delta_at_bound": gf.at_bound, "n_obs": len(series)}
    return assemble_params(lin.eta, lin.alpha_tilde, gf.delta_mle, y, extras)
