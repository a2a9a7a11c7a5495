"""scikit-learn style wrappers around calibration and pricing."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .calibration import DELTA_BOUNDS, PriceSeries, fit_gamma_dimension, fit_log_linear, assemble_params
from .pricing import fair_strike
from .process import ModelParams, ProcState

__all__ = ["IndexCalibrator", "VarianceSwapPricer"]


def _as_series(X) -> PriceSeries:
    X = check_array(X, ensure_min_samples=3)
    if X.shape[1] != 2:
        raise ValueError(f"expected columns [time, close], got {X.shape[1]} columns")
    return PriceSeries(X[:, 0], X[:, 1])


class IndexCalibrator(TransformerMixin, BaseEstimator):
    """Fit the model to an index series and map closes to the normalized index.

    Parameters
    ----------
    delta_bounds : tuple of float
        Search interval for the maximum-likelihood dimension.
    target_mean : float
        Required sample mean of the normalized index (a1 / b).

    Attributes
    ----------
    eta_, alpha_tilde_, delta_, gamma_ : float
        Fitted values.
    params_ : ModelParams
    result_ : CalibrationResult
    """

    def __init__(self, delta_bounds=DELTA_BOUNDS, target_mean=1.0):
        self.delta_bounds = delta_bounds
        self.target_mean = target_mean

    def fit(self, X, y=None):
        """Fit on an array of shape (n, 2) holding [time in years, close]."""
        series = _as_series(X)
        lin = fit_log_linear(series, self.target_mean)
        resid = series.closes * np.exp(-lin.eta * series.times) / lin.alpha_tilde
        gf = fit_gamma_dimension(resid, tuple(self.delta_bounds))
        self.result_ = assemble_params(lin.eta, lin.alpha_tilde, gf.delta_mle, resid,
                                       {"delta_mm": gf.delta_mm, "intercept": lin.intercept})
        self.eta_ = lin.eta
        self.alpha_tilde_ = lin.alpha_tilde
        self.delta_ = gf.delta_mle
        self.gamma_ = self.result_.gamma
        self.params_ = self.result_.params
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        """Normalized index Y_t as a column vector."""
        check_is_fitted(self, "params_")
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError("expected columns [time, close]")
        return (X[:, 1] / (self.alpha_tilde_ * np.exp(self.eta_ * X[:, 0])))[:, None]


class VarianceSwapPricer(BaseEstimator):
    """Fair variance strikes for a grid of maturities.

    ``fit`` only validates the parameters; ``predict`` maps maturities (years)
    to strikes.
    """

    def __init__(self, alpha_tilde=0.248, eta=0.1028, a1=0.1028, b=0.1028, gamma=0.0137, y0=0.3):
        self.alpha_tilde = alpha_tilde
        self.eta = eta
        self.a1 = a1
        self.b = b
        self.gamma = gamma
        self.y0 = y0

    @classmethod
    def from_params(cls, params: ModelParams, y0: float) -> "VarianceSwapPricer":
        return cls(y0=y0, **params.as_dict())

    def fit(self, X=None, y=None):
        self.params_ = ModelParams(self.alpha_tilde, self.eta, self.a1, self.b, self.gamma)
        self.state_ = ProcState(0.0, self.y0)
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        T = check_array(np.asarray(X, dtype=float).reshape(-1, 1)).ravel()
        return np.array([fair_strike(self.params_, self.state_, t) for t in T])
