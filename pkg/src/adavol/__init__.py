"""Streaming GARCH volatility estimation (AdaVol) with a batch QMLE baseline."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import *  # noqa: F401,F403
from .garch import (
    GarchParams,
    ModelOrder,
    SimOutput,
    VteParams,
    fourth_moment_ok,
    random_params,
    simulate,
    strict_stationarity_estimate,
    validate,
)
from .estimator import AdaVolConfig, AdaVolState, StreamResult, init, project, run_stream, update
from .batch import FitResult, RefitSchedule, RollingFit, fit, refit_every_step, rolling_refit
from .data import PriceSeries, ReturnSeries, load_prices, log_returns, prices_from_returns, read_columns
from .metrics import EvalReport, evaluate, mae_var, mape, mpe, norm_inv_cdf, pinball, qs_score
