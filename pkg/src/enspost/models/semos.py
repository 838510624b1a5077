"""The static seasonal model family: SEMOS, DAR-SEMOS, DAR-GARCH-SEMOS, SAR-SEMOS.

All four share the seasonal location/log-scale predictors and a joint
CRPS-minimizing BFGS fit on a static training period.  They differ in the
residual recursion stacked on top:

* SEMOS: none.
* DAR-SEMOS: AR(p) on the deseasonalized errors r(t) = y(t) - mu_S(t).
* DAR-GARCH-SEMOS: DAR-SEMOS plus a multiplicative GARCH(1,1) variance
  factor on the standardized innovations rho(t) = eps(t) / sigma_S(t);
  GARCH coefficients are carried as unconstrained square roots during the
  optimization so they stay non-negative.
* SAR-SEMOS: AR(p) on the standardized errors z(t) = (y(t) - mu_S(t)) / sigma_S(t).

During fitting the AR recursions are teacher forced (observed residual
histories); the first p training days carry no prediction and are dropped
from the objective.  During prediction, residuals of the k most recent
days (lead-time offset) are unobservable and are bridged with the
multi-step AR recursion; the GARCH recursion bridges them with its
conditional-expectation update.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.signal import lfilter

from ..data import StationSeries, day_of_year, time_index
from ..errors import DegenerateSeries, InsufficientHistory, InvalidInput, NumericalFailure
from ..optimize import OptimizeSettings, minimize
from ..scoring import crps_normal_series
from ..seasonal import N_COEFFS, seasonal_design
from ..timeseries import ARCoeffs, GARCHCoeffs, ar_multistep, fit_ar_yule_walker, fit_garch
from .base import FittedModel, PredictionContext, register

logger = logging.getLogger(__name__)

MIN_TRAINING_DAYS = 730  # two full years, for Fourier identifiability


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------


def _check_training_series(series: StationSeries) -> None:
    if not series.is_complete():
        raise InvalidInput("training series has missing observations; impute first")
    if series.n_days < MIN_TRAINING_DAYS:
        raise InsufficientHistory(
            f"seasonal fits need >= {MIN_TRAINING_DAYS} training days, got {series.n_days}")


def _designs(series: StationSeries, origin) -> tuple[np.ndarray, np.ndarray]:
    t = time_index(series.dates, origin)
    return seasonal_design(t, series.ens_mean), seasonal_design(t, series.ens_sd)


def _ols(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coeffs


def _scale_identity_init() -> np.ndarray:
    init = np.zeros(N_COEFFS)
    init[1] = 1.0  # b1 = 1, everything else 0
    return init


def empirical_sd_by_day_of_year(dates, obs, half_width: int = 15) -> np.ndarray:
    """Per-date empirical sd of the observations falling in a symmetric
    day-of-year window (half-width in days, pooled across years)."""
    obs = np.asarray(obs, dtype=float)
    doy = day_of_year(dates)
    out = np.empty(obs.size)
    for d in np.unique(doy):
        dist = np.abs(doy - d)
        mask = np.minimum(dist, 365 - dist) <= half_width
        pooled = obs[mask]
        if pooled.size < 2:
            raise DegenerateSeries(f"day-of-year window around {d} has < 2 observations")
        out[doy == d] = np.std(pooled, ddof=1)
    if np.any(out <= 0):
        raise DegenerateSeries("constant observations inside a day-of-year window")
    return out


def _teacher_forced_ar(values: np.ndarray, eta: float, tau: np.ndarray) -> np.ndarray:
    """One-step AR predictions for indices p..n-1 using observed history."""
    p = tau.size
    n = values.size
    pred = np.full(n - p, eta)
    for j in range(1, p + 1):
        pred += tau[j - 1] * (values[p - j: n - j] - eta)
    return pred


def _garch_path(w: np.ndarray, rho_sq: np.ndarray) -> np.ndarray:
    """GARCH variance path sigma_G^2 aligned with rho_sq.

    w holds (omega0, omega1, omega2) already squared/non-negative.  Element
    0 is the unconditional variance (denominator floored at 1e-3 to keep
    the fitting objective continuous across the stationarity boundary);
    element i uses rho_sq[i-1].
    """
    init = w[0] / max(1.0 - w[1] - w[2], 1e-3)
    if not init > 0:
        init = 1.0
    out = np.empty(rho_sq.size)
    out[0] = init
    if rho_sq.size > 1:
        drive = w[0] + w[2] * rho_sq[:-1]
        out[1:] = lfilter([1.0], [1.0, -w[1]], drive, zi=np.array([w[1] * init]))[0]
    return out


def _ar_forecast(ar: ARCoeffs, history: np.ndarray, steps: int) -> float:
    """Last value of the multi-step recursion; short histories are padded
    with eta (the unconditional mean)."""
    if history.size < ar.p:
        history = np.concatenate([np.full(ar.p - history.size, ar.eta), history])
    if ar.p == 0:
        return ar.eta
    return float(ar_multistep(ar, history, steps)[-1])


# ---------------------------------------------------------------------------
# training evaluation (one code path used by objective, residuals and CRPS)
# ---------------------------------------------------------------------------


def _evaluate(kind: str, theta: np.ndarray, p: int, x_loc: np.ndarray,
              x_scale: np.ndarray, y: np.ndarray):
    """Per-day (mu, sigma) of the model over the training period.

    Returns (mu, sigma, start) where start = p is the first day carrying a
    prediction.  GARCH coefficients inside theta are square roots.
    """
    c_loc = theta[:N_COEFFS]
    c_scale = theta[N_COEFFS:2 * N_COEFFS]
    mu_s = x_loc @ c_loc
    sigma_s = np.exp(x_scale @ c_scale)

    if kind == "SEMOS":
        return mu_s, sigma_s, 0

    eta = theta[2 * N_COEFFS]
    tau = theta[2 * N_COEFFS + 1: 2 * N_COEFFS + 1 + p]

    if kind == "SAR-SEMOS":
        z = (y - mu_s) / sigma_s
        z_pred = _teacher_forced_ar(z, eta, tau)
        return mu_s[p:] + sigma_s[p:] * z_pred, sigma_s[p:], p

    r = y - mu_s
    r_pred = _teacher_forced_ar(r, eta, tau)
    mu = mu_s[p:] + r_pred
    if kind == "DAR-SEMOS":
        return mu, sigma_s[p:], p

    # DAR-GARCH-SEMOS
    w = np.square(theta[2 * N_COEFFS + 1 + p:])
    eps = r[p:] - r_pred
    rho_sq = np.square(eps / sigma_s[p:])
    sig_g2 = _garch_path(w, rho_sq)
    return mu, sigma_s[p:] * np.sqrt(sig_g2), p


def _objective(kind: str, p: int, x_loc, x_scale, y):
    def fun(theta):
        mu, sigma, start = _evaluate(kind, theta, p, x_loc, x_scale, y)
        with np.errstate(all="ignore"):
            return float(np.mean(crps_normal_series(mu, sigma, y[start:])))
    return fun


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def _fit_family(kind: str, series: StationSeries, settings: OptimizeSettings | None,
                max_ar_order: int | None, sd_window_half_width: int) -> FittedModel:
    _check_training_series(series)
    origin = series.dates[0]
    x_loc, x_scale = _designs(series, origin)
    y = series.obs

    loc0 = _ols(x_loc, y)
    ols_resid = y - x_loc @ loc0

    ar0 = None
    garch0 = None
    if kind in ("DAR-SEMOS", "DAR-GARCH-SEMOS"):
        ar0 = fit_ar_yule_walker(ols_resid, max_ar_order)
    if kind in ("SEMOS", "DAR-SEMOS"):
        scale0 = _scale_identity_init()
    else:
        s_hat = empirical_sd_by_day_of_year(series.dates, y, sd_window_half_width)
        scale0 = _ols(x_scale, np.log(s_hat))
    if kind == "DAR-GARCH-SEMOS":
        sigma_s0 = np.exp(x_scale @ scale0)
        eps0 = ols_resid[ar0.p:] - _teacher_forced_ar(ols_resid, ar0.eta, np.asarray(ar0.tau))
        rho0 = eps0 / sigma_s0[ar0.p:]
        try:
            garch0 = fit_garch(rho0)
        except (DegenerateSeries, NumericalFailure) as exc:
            garch0 = GARCHCoeffs(float(np.var(rho0)), 0.0, 0.0)
            logger.warning("GARCH initialization failed (%s); falling back to %s", exc, garch0)
    if kind == "SAR-SEMOS":
        sigma_s0 = np.exp(x_scale @ scale0)
        ar0 = fit_ar_yule_walker((y - x_loc @ loc0) / sigma_s0, max_ar_order)

    p = 0 if ar0 is None else ar0.p
    pieces = [loc0, scale0]
    if kind != "SEMOS":
        pieces.append(np.array([ar0.eta, *ar0.tau]))
    if kind == "DAR-GARCH-SEMOS":
        pieces.append(np.sqrt([garch0.omega0, garch0.omega1, garch0.omega2]))
    theta0 = np.concatenate(pieces)

    fun = _objective(kind, p, x_loc, x_scale, y)
    result = minimize(fun, theta0, settings or OptimizeSettings())
    theta = result.x

    ar = None if kind == "SEMOS" else ARCoeffs(
        p=p, eta=float(theta[2 * N_COEFFS]),
        tau=tuple(float(v) for v in theta[2 * N_COEFFS + 1: 2 * N_COEFFS + 1 + p]))
    garch = None
    if kind == "DAR-GARCH-SEMOS":
        w = np.square(theta[2 * N_COEFFS + 1 + p:])
        garch = GARCHCoeffs(float(w[0]), float(w[1]), float(w[2]))

    mu, sigma, start = _evaluate(kind, theta, p, x_loc, x_scale, y)
    model = FittedModel(
        kind=kind,
        loc=theta[:N_COEFFS].copy(),
        scale=theta[N_COEFFS: 2 * N_COEFFS].copy(),
        ar=ar,
        garch=garch,
        meta={
            "origin": str(origin),
            "lead_time_h": series.lead_time_h,
            "station_id": series.station_id,
            "train_start": str(series.dates[0]),
            "train_end": str(series.dates[-1]),
            "n_train": series.n_days,
            "converged": bool(result.converged),
            "train_crps": float(result.value),
            "init_crps": float(fun(theta0)),
            "iterations": int(result.iterations),
        },
        train_residuals=(y[start:] - mu) / sigma,
    )
    return model


def semos_fit(series: StationSeries, settings: OptimizeSettings | None = None) -> FittedModel:
    """Fit SEMOS: 20 seasonal coefficients, jointly CRPS-minimized."""
    return _fit_family("SEMOS", series, settings, None, 15)


def dar_semos_fit(series: StationSeries, settings: OptimizeSettings | None = None,
                  max_ar_order: int | None = None) -> FittedModel:
    """Fit DAR-SEMOS: SEMOS plus AR(p) on the deseasonalized errors.

    The AR order is chosen once from the OLS residuals and stays fixed
    during the joint optimization.
    """
    return _fit_family("DAR-SEMOS", series, settings, max_ar_order, 15)


def dar_garch_semos_fit(series: StationSeries, settings: OptimizeSettings | None = None,
                        max_ar_order: int | None = None,
                        sd_window_half_width: int = 15) -> FittedModel:
    """Fit DAR-GARCH-SEMOS: DAR-SEMOS with a multiplicative GARCH(1,1)
    variance factor."""
    return _fit_family("DAR-GARCH-SEMOS", series, settings, max_ar_order, sd_window_half_width)


def sar_semos_fit(series: StationSeries, settings: OptimizeSettings | None = None,
                  max_ar_order: int | None = None,
                  sd_window_half_width: int = 15) -> FittedModel:
    """Fit SAR-SEMOS: SEMOS plus AR(p) on the standardized errors."""
    return _fit_family("SAR-SEMOS", series, settings, max_ar_order, sd_window_half_width)


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------


def _seasonal_parts(model: FittedModel, series: StationSeries, ctx: PredictionContext):
    x_loc = seasonal_design(ctx.t, series.ens_mean)
    x_scale = seasonal_design(ctx.t, series.ens_sd)
    return x_loc @ model.loc, np.exp(x_scale @ model.scale)


def _garch_sigma_factor(model: FittedModel, rho_sq_obs: np.ndarray, p: int,
                        target: int) -> float:
    """sigma_G at index ``target`` given observable squared innovations
    rho_sq_obs (absolute indices p..p+len-1 of the series).

    Beyond the observable range the recursion replaces the unknown rho^2 by
    its conditional expectation sigma_G^2 (standard multi-step variance
    forecast).
    """
    g = model.garch
    w = np.array([g.omega0, g.omega1, g.omega2])
    if rho_sq_obs.size:
        path = _garch_path(w, rho_sq_obs)
        last_idx = p + path.size - 1      # absolute index of path[-1]
        # one step ahead still sees the last observable rho^2
        var = w[0] + w[1] * path[-1] + w[2] * rho_sq_obs[-1]
        steps_left = target - last_idx - 1
    else:
        var = _garch_path(w, np.zeros(1))[0]  # unconditional start
        steps_left = target - p
    for _ in range(max(steps_left, 0)):
        var = w[0] + (w[1] + w[2]) * var
    return float(np.sqrt(var))


def _predict_family(model: FittedModel, series: StationSeries, dates):
    ctx = PredictionContext.build(model, series, dates)
    mu_s, sigma_s = _seasonal_parts(model, series, ctx)
    kind = model.kind

    if kind == "SEMOS":
        return mu_s[ctx.indices].copy(), sigma_s[ctx.indices].copy()

    ar = model.ar
    tau = np.asarray(ar.tau, dtype=float)
    obs = series.obs
    mu_out = np.empty(ctx.indices.size)
    sigma_out = np.empty(ctx.indices.size)

    if kind == "SAR-SEMOS":
        z = (obs - mu_s) / sigma_s
        for out_i, i in enumerate(ctx.indices):
            h = ctx.history_end(i)
            z_hat = _ar_forecast(ar, z[:h], i - h + 1)
            mu_out[out_i] = mu_s[i] + sigma_s[i] * z_hat
            sigma_out[out_i] = sigma_s[i]
        return mu_out, sigma_out

    r = obs - mu_s
    for out_i, i in enumerate(ctx.indices):
        h = ctx.history_end(i)
        r_hat = _ar_forecast(ar, r[:h], i - h + 1)
        mu_out[out_i] = mu_s[i] + r_hat
        if kind == "DAR-SEMOS":
            sigma_out[out_i] = sigma_s[i]
        else:
            p = ar.p
            n_obs = max(h - p, 0)
            if n_obs > 0:
                eps = r[p: p + n_obs] - _teacher_forced_ar(r[:h], ar.eta, tau)[:n_obs]
                rho_sq = np.square(eps / sigma_s[p: p + n_obs])
            else:
                rho_sq = np.empty(0)
            sigma_out[out_i] = sigma_s[i] * _garch_sigma_factor(model, rho_sq, p, i)
    return mu_out, sigma_out


def semos_predict(model, series, dates):
    return _predict_family(model, series, dates)


def dar_semos_predict(model, series, dates):
    return _predict_family(model, series, dates)


def dar_garch_semos_predict(model, series, dates):
    return _predict_family(model, series, dates)


def sar_semos_predict(model, series, dates):
    return _predict_family(model, series, dates)


register("SEMOS", semos_fit, semos_predict)
register("DAR-SEMOS", dar_semos_fit, dar_semos_predict)
register("DAR-GARCH-SEMOS", dar_garch_semos_fit, dar_garch_semos_predict)
register("SAR-SEMOS", sar_semos_fit, sar_semos_predict)
