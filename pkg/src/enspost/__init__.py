"""Time-series postprocessing of ensemble temperature forecasts.

The package turns raw ensemble forecasts into calibrated Gaussian
predictive distributions.  Six models share one fit/predict interface: the
rolling benchmarks EMOS and AR-EMOS, the static seasonal SEMOS, and its
autoregressive extensions DAR-SEMOS, DAR-GARCH-SEMOS and SAR-SEMOS, all
estimated by joint CRPS minimization.  A verification toolbox (proper
scores, PIT, prediction intervals, Diebold-Mariano and Ljung-Box tests
with Benjamini-Hochberg control) supports model comparison, and a
synthetic data generator provides ground truth for oracle testing.
"""

from . import data, models, optimize, scoring, seasonal, timeseries, verify

__version__ = "0.1.0"

__all__ = ["data", "models", "optimize", "scoring", "seasonal", "timeseries", "verify"]
