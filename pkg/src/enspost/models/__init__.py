"""Postprocessing models behind a uniform fit/predict interface."""

from .base import (
    MODEL_KINDS,
    SEASONAL_KINDS,
    FittedModel,
    PredictionContext,
    fit,
    predict,
)
from .emos import emos_fit, emos_fit_window, emos_predict
from .ar_emos import ar_emos_fit, ar_emos_predict
from .semos import (
    dar_garch_semos_fit,
    dar_garch_semos_predict,
    dar_semos_fit,
    dar_semos_predict,
    empirical_sd_by_day_of_year,
    sar_semos_fit,
    sar_semos_predict,
    semos_fit,
    semos_predict,
)

__all__ = [
    "MODEL_KINDS",
    "SEASONAL_KINDS",
    "FittedModel",
    "PredictionContext",
    "fit",
    "predict",
    "emos_fit",
    "emos_fit_window",
    "emos_predict",
    "ar_emos_fit",
    "ar_emos_predict",
    "semos_fit",
    "semos_predict",
    "dar_semos_fit",
    "dar_semos_predict",
    "dar_garch_semos_fit",
    "dar_garch_semos_predict",
    "sar_semos_fit",
    "sar_semos_predict",
    "empirical_sd_by_day_of_year",
]
