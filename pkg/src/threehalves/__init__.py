"""Variance swap pricing and hedging under the real-world 3/2 volatility model."""

__version__ = "0.1.0"

from .exceptions import (ConstraintViolation, ConvergenceError, DataError, DomainConditionError,
                         DomainError, InfiniteMoment, ThreeHalvesError)
from .process import PAPER_PARAMS, ModelParams, ProcState
from .pricing import (PricingInputs, SwapContract, benchmarked_integral_moment,
                      benchmarked_variance_expectation, fair_strike, laplace_functional,
                      swap_value, zcb_price)
from .greeks import GreeksReport, delta_dF, delta_dy, greeks_report, vega
from .montecarlo import MCConfig, MCEstimate
from .specfun import HypSeriesCtrl, LogScaled

__all__ = [
    "__version__",
    "ThreeHalvesError", "DomainError", "InfiniteMoment", "DomainConditionError",
    "ConvergenceError", "ConstraintViolation", "DataError",
    "ModelParams", "ProcState", "PAPER_PARAMS",
    "PricingInputs", "SwapContract", "zcb_price", "laplace_functional",
    "benchmarked_integral_moment", "benchmarked_variance_expectation", "fair_strike", "swap_value",
    "GreeksReport", "delta_dy", "delta_dF", "vega", "greeks_report",
    "MCConfig", "MCEstimate", "HypSeriesCtrl", "LogScaled",
]
