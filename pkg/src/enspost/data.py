"""Station-level ensemble/observation series: ingest, validate, impute, simulate.

A StationSeries holds one (station, lead time) daily series: observations,
the full member matrix and the derived ensemble mean/sd.  Values are
immutable after construction (arrays are marked read-only) and safe to
share across threads.

The synthetic generator produces series whose observations follow the same
seasonal-AR(-GARCH) recursions the postprocessing models assume, anchored
to an *ideal* forecast center/spread, while the delivered ensemble members
are bias- and dispersion-distorted forecasts of that ideal.  The exact
conditional truth (mu, sigma) per date is returned alongside for oracle
tests.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ImputationFailure,
    InvalidConfig,
    InvalidEnsemble,
    ParseError,
)
from .seasonal import PERIOD_DAYS, SeasonalCoeffs, seasonal_location, seasonal_logscale
from .timeseries import ARCoeffs, GARCHCoeffs, is_stationary

LEAD_TIMES_H = (24, 48, 72, 96, 120)

_DAY = np.timedelta64(1, "D")


def lead_time_offset(lead_time_h: int) -> int:
    """Number of most recent days unobservable at issuance: ceil(lead/24) - 1."""
    return int(np.ceil(lead_time_h / 24.0)) - 1


def time_index(dates, origin) -> np.ndarray:
    """Running day index with t = 1 at ``origin`` (first training date)."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    origin = np.datetime64(origin, "D")
    return (dates - origin) / _DAY + 1.0


def day_of_year(dates) -> np.ndarray:
    dates = np.asarray(dates, dtype="datetime64[D]")
    years = dates.astype("datetime64[Y]")
    return ((dates - years) / _DAY).astype(int) + 1


def ensemble_stats(members) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation (divisor m-1) of one ensemble."""
    x = np.asarray(members, dtype=float).ravel()
    if x.size < 2:
        raise InvalidEnsemble(f"need at least 2 members, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InvalidEnsemble("ensemble contains non-finite members")
    return float(np.mean(x)), float(np.std(x, ddof=1))


@dataclass(frozen=True)
class StationSeries:
    """Daily (station, lead time) series of observations and ensemble forecasts."""

    station_id: str
    lead_time_h: int
    dates: np.ndarray   # datetime64[D], strictly increasing, daily step
    obs: np.ndarray     # float; NaN marks missing before imputation
    members: np.ndarray  # shape (n_days, m)
    ens_mean: np.ndarray
    ens_sd: np.ndarray

    @classmethod
    def build(cls, station_id: str, lead_time_h: int, dates, obs, members) -> "StationSeries":
        """Validate invariants, derive ensemble statistics and freeze arrays."""
        dates = np.asarray(dates, dtype="datetime64[D]")
        obs = np.array(obs, dtype=float)
        members = np.array(members, dtype=float)
        n = dates.size
        if n == 0:
            raise ParseError("series has no rows")
        if obs.shape != (n,) or members.ndim != 2 or members.shape[0] != n:
            raise ParseError("obs/member shapes do not match the date axis")
        if members.shape[1] < 2:
            raise InvalidEnsemble(f"need at least 2 members, got {members.shape[1]}")
        if n > 1:
            deltas = np.diff(dates)
            bad = np.nonzero(deltas != _DAY)[0]
            if bad.size:
                i = int(bad[0])
                kind = "duplicated or non-monotone" if deltas[i] <= np.timedelta64(0, "D") else "gapped"
                # i + 3: second date of the offending pair, counting the header row
                raise ParseError(f"{kind} dates at row {i + 3}: {dates[i]} -> {dates[i + 1]}")
        if not np.all(np.isfinite(members)):
            raise InvalidEnsemble("ensemble members must all be finite")
        ens_mean = members.mean(axis=1)
        ens_sd = members.std(axis=1, ddof=1)
        if np.any(ens_sd <= 0):
            i = int(np.argmax(ens_sd <= 0))
            raise InvalidEnsemble(f"degenerate ensemble (sd=0) on {dates[i]}")
        series = cls(
            station_id=str(station_id),
            lead_time_h=int(lead_time_h),
            dates=dates,
            obs=obs,
            members=members,
            ens_mean=ens_mean,
            ens_sd=ens_sd,
        )
        for arr in (dates, obs, members, ens_mean, ens_sd):
            arr.setflags(write=False)
        return series

    @property
    def n_days(self) -> int:
        return self.dates.size

    @property
    def n_members(self) -> int:
        return self.members.shape[1]

    def is_complete(self) -> bool:
        return bool(np.all(np.isfinite(self.obs)))

    def index_of(self, date) -> int:
        pos = int(np.searchsorted(self.dates, np.datetime64(date, "D")))
        if pos >= self.n_days or self.dates[pos] != np.datetime64(date, "D"):
            raise KeyError(f"date {date} not in series {self.station_id}/{self.lead_time_h}h")
        return pos

    def window(self, start=None, end=None) -> "StationSeries":
        """Sub-series with start <= date <= end (inclusive bounds, either optional)."""
        mask = np.ones(self.n_days, dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return StationSeries.build(
            self.station_id, self.lead_time_h,
            self.dates[mask], self.obs[mask], self.members[mask],
        )


# ---------------------------------------------------------------------------
# imputation
# ---------------------------------------------------------------------------


def impute_missing(obs, half_window: int = 4, decay: float = 0.5, max_gap: int = 3) -> np.ndarray:
    """Fill NaN gaps by symmetric exponentially weighted moving averaging.

    Each missing value becomes the weighted mean of the *observed* values
    within ``half_window`` days on either side, with weight decay**d at
    distance d.  Observed values are never touched, so imputing a complete
    series is the identity.

    Raises
    ------
    ImputationFailure
        If a gap exceeds ``max_gap`` consecutive days or a missing value
        has no observed neighbor within reach on one side.
    """
    obs = np.asarray(obs, dtype=float)
    out = obs.copy()
    if not (0.0 < decay < 1.0):
        raise ImputationFailure(f"decay must lie in (0, 1), got {decay}")
    if half_window < 1:
        raise ImputationFailure(f"half_window must be >= 1, got {half_window}")
    missing = np.nonzero(np.isnan(obs))[0]
    if missing.size == 0:
        return out
    # reject gaps longer than the station-selection rule allows
    run = 1
    for prev, cur in zip(missing[:-1], missing[1:]):
        run = run + 1 if cur == prev + 1 else 1
        if run > max_gap:
            raise ImputationFailure(f"gap longer than {max_gap} days ending at index {cur}")
    n = obs.size
    for i in missing:
        wsum = 0.0
        vsum = 0.0
        seen_left = seen_right = False
        for d in range(1, half_window + 1):
            if i - d >= 0 and np.isfinite(obs[i - d]):
                w = decay ** d
                wsum += w
                vsum += w * obs[i - d]
                seen_left = True
            if i + d < n and np.isfinite(obs[i + d]):
                w = decay ** d
                wsum += w
                vsum += w * obs[i + d]
                seen_right = True
        if not (seen_left and seen_right):
            raise ImputationFailure(
                f"no observed value within {half_window} days on "
                f"{'the left' if not seen_left else 'the right'} of index {i}"
            )
        out[i] = vsum / wsum
    return out


def impute_series(series: StationSeries, half_window: int = 4, decay: float = 0.5,
                  max_gap: int = 3) -> StationSeries:
    """Return a copy of ``series`` with missing observations imputed."""
    if series.is_complete():
        return series
    obs = impute_missing(series.obs, half_window=half_window, decay=decay, max_gap=max_gap)
    return StationSeries.build(series.station_id, series.lead_time_h,
                               series.dates, obs, series.members)


# ---------------------------------------------------------------------------
# CSV interface
# ---------------------------------------------------------------------------


def write_station_csv(series: StationSeries, path, float_fmt: str = "%.9f") -> None:
    """Write one series in the canonical CSV schema.

    Header ``station_id,date,lead_time_h,obs,m1,...,m{M}``; empty obs field
    marks a missing observation.  Nine decimals by default so a write/read
    round trip preserves values to 1e-9.
    """
    m = series.n_members
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "date", "lead_time_h", "obs"]
                        + [f"m{i + 1}" for i in range(m)])
        for i in range(series.n_days):
            obs = "" if np.isnan(series.obs[i]) else float_fmt % series.obs[i]
            writer.writerow(
                [series.station_id, str(series.dates[i]), series.lead_time_h, obs]
                + [float_fmt % v for v in series.members[i]]
            )


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"row {row}: cannot parse {col} value {text!r}") from None
    if not np.isfinite(value):
        raise ParseError(f"row {row}: non-finite {col} value {text!r}")
    return value


def load_station_csv(path, station_id: str | None = None,
                     lead_time_h: int | None = None) -> StationSeries:
    """Load one (station, lead time) series from a CSV file.

    Files may mix stations and lead times; pass the filters to select one
    combination.  The loaded series must resolve to exactly one
    (station_id, lead_time_h) pair, have strictly increasing gap-free daily
    dates, and a constant member count.  Missing obs fields become NaN and
    are left for imputation.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: missing header") from None
        if header[:4] != ["station_id", "date", "lead_time_h", "obs"]:
            raise ParseError(f"row 1: header must start with station_id,date,lead_time_h,obs, got {header[:4]}")
        member_cols = header[4:]
        if not member_cols or member_cols != [f"m{i + 1}" for i in range(len(member_cols))]:
            raise ParseError("row 1: member columns must be m1..mM in order")
        m = len(member_cols)

        dates, obs, members = [], [], []
        keys = set()
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4 + m:
                raise ParseError(f"row {row_no}: expected {4 + m} fields, got {len(row)}")
            sid, date_text, lead_text = row[0], row[1], row[2]
            lead = int(_parse_float(lead_text, row_no, "lead_time_h"))
            if station_id is not None and sid != station_id:
                continue
            if lead_time_h is not None and lead != int(lead_time_h):
                continue
            keys.add((sid, lead))
            if len(keys) > 1:
                raise ParseError(
                    f"row {row_no}: file mixes {sorted(keys)}; pass station_id/lead_time_h filters"
                )
            try:
                dates.append(np.datetime64(date_text, "D"))
            except ValueError:
                raise ParseError(f"row {row_no}: invalid ISO date {date_text!r}") from None
            obs.append(np.nan if row[3] == "" else _parse_float(row[3], row_no, "obs"))
            members.append([_parse_float(v, row_no, f"m{j + 1}") for j, v in enumerate(row[4:])])

    if not dates:
        raise ParseError(f"no rows match station_id={station_id!r}, lead_time_h={lead_time_h!r}")
    (sid, lead), = keys
    return StationSeries.build(sid, lead, np.array(dates, dtype="datetime64[D]"),
                               obs, members)


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    """Data-generating process for one synthetic station.

    The ideal forecast center follows a seasonal cycle plus AR(1) weather
    noise; the ideal spread follows a strictly positive seasonal cycle.
    Members are drawn around the ideal center with ``ens_bias`` added and
    the spread scaled by ``ens_dispersion`` (values < 1 produce the
    underdispersion typical of raw ensembles).  Observations follow the
    configured seasonal model exactly, driven by the bias/dispersion-
    corrected realized ensemble statistics xbar - ens_bias and
    s / ens_dispersion:

    * ``standardized_ar=False``: deseasonalized errors r(t) follow an AR(p)
      around eta with innovations sigma_S(t) * sigma_G(t) * z(t), where the
      GARCH factor is optional (``garch=None`` fixes sigma_G = 1).
    * ``standardized_ar=True``: standardized errors z(t) follow an AR(p)
      with unit-variance innovations and y = mu_S + sigma_S * z.

    With ``ens_bias=0`` and ``ens_dispersion=1`` the configured
    coefficients are therefore the exact regression truth for the
    delivered ensemble; nonzero distortions shift the truth in closed form
    (location intercept by -a1 * ens_bias, scale slope by a factor
    1 / ens_dispersion) while leaving the raw ensemble biased and
    misdispersed against the observations.
    """

    n_days: int = 1826
    m: int = 50
    seed: int = 0
    station_id: str = "S01"
    lead_time_h: int = 24
    start_date: str = "2015-01-01"
    # truth coefficients of the postprocessing model
    loc: SeasonalCoeffs = field(default_factory=lambda: SeasonalCoeffs(
        intercept=0.0, slope=1.0, fourier_intercept=(2.0, 1.0, 0.3, 0.2)))
    scale: SeasonalCoeffs = field(default_factory=lambda: SeasonalCoeffs(
        intercept=-0.3, slope=0.3, fourier_intercept=(0.15, 0.1, 0.0, 0.0)))
    ar: ARCoeffs = field(default_factory=lambda: ARCoeffs(p=1, eta=0.0, tau=(0.6,)))
    garch: GARCHCoeffs | None = None
    standardized_ar: bool = False
    # ensemble distortion
    ens_bias: float = 0.0
    ens_dispersion: float = 1.0
    # ideal forecast process
    clim_mean: float = 10.0
    clim_amp: float = 8.0
    clim_phase: float = -1.9
    weather_ar: float = 0.7
    weather_sd: float = 2.0
    spread_base: float = 1.0
    spread_amp: float = 0.4
    spread_phase: float = 0.8

    def validate(self) -> None:
        if self.n_days < 2:
            raise InvalidConfig("n_days must be >= 2")
        if self.m < 2:
            raise InvalidConfig("need at least 2 ensemble members")
        if self.ens_dispersion <= 0:
            raise InvalidConfig("ens_dispersion must be > 0")
        if self.spread_base <= 0 or self.spread_amp < 0:
            raise InvalidConfig("spread cycle must stay positive")
        if not (0 <= abs(self.weather_ar) < 1):
            raise InvalidConfig(f"weather AR coefficient {self.weather_ar} is nonstationary")
        if not is_stationary(self.ar.tau):
            raise InvalidConfig(f"AR coefficients {self.ar.tau} are nonstationary")
        if self.garch is not None and self.garch.omega1 + self.garch.omega2 >= 1.0:
            raise InvalidConfig("GARCH persistence omega1 + omega2 must be < 1")
        if self.garch is not None and self.standardized_ar:
            raise InvalidConfig("GARCH applies to the deseasonalized-error process only")


@dataclass(frozen=True)
class SyntheticTruth:
    """Exact per-date conditional truth of the generating process."""

    mu: np.ndarray              # conditional mean of y(t) given the past
    sigma: np.ndarray           # conditional standard deviation
    mu_seasonal: np.ndarray     # seasonal location component mu_S(t)
    sigma_seasonal: np.ndarray  # seasonal scale component sigma_S(t)


_BURN = 300


def _simulate_ar(eta: float, tau: np.ndarray, innovations: np.ndarray) -> np.ndarray:
    """AR(p) recursion around eta driven by the given innovations (with history
    initialized at eta)."""
    p = tau.size
    x = np.empty(innovations.size)
    for t in range(x.size):
        acc = eta
        for j in range(1, p + 1):
            past = x[t - j] if t - j >= 0 else eta
            acc += tau[j - 1] * (past - eta)
        x[t] = acc + innovations[t]
    return x


def _ar_teacher_pred(eta: float, tau: np.ndarray, x: np.ndarray, start: int) -> np.ndarray:
    """One-step AR predictions for x[start:], using the actual past values."""
    p = tau.size
    out = np.full(x.size - start, eta)
    for j in range(1, p + 1):
        past = np.where(np.arange(start, x.size) - j >= 0, x[start - j: x.size - j], eta)
        out += tau[j - 1] * (past - eta)
    return out


def generate_synthetic(cfg: SyntheticConfig) -> tuple[StationSeries, SyntheticTruth]:
    """Draw one synthetic station series plus its exact conditional truth.

    Bit-reproducible for a fixed seed.  See SyntheticConfig for the model.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_days
    dates = np.datetime64(cfg.start_date, "D") + np.arange(n) * _DAY
    t = time_index(dates, cfg.start_date)
    omega = 2.0 * np.pi / PERIOD_DAYS

    # ideal forecast center and spread
    w_innov = rng.standard_normal(n + _BURN) * cfg.weather_sd
    weather = _simulate_ar(0.0, np.array([cfg.weather_ar]), w_innov)[_BURN:]
    center = cfg.clim_mean + cfg.clim_amp * np.sin(omega * t + cfg.clim_phase) + weather
    spread = cfg.spread_base + cfg.spread_amp * 0.5 * (1.0 + np.sin(omega * t + cfg.spread_phase))

    # distorted ensemble around the ideal
    deltas = rng.standard_normal((n, cfg.m))
    members = (center + cfg.ens_bias)[:, None] + cfg.ens_dispersion * spread[:, None] * deltas

    # observation process driven by the distortion-corrected realized statistics
    xbar_eff = members.mean(axis=1) - cfg.ens_bias
    s_eff = members.std(axis=1, ddof=1) / cfg.ens_dispersion
    mu_s = seasonal_location(cfg.loc, t, xbar_eff)
    sigma_s = np.exp(seasonal_logscale(cfg.scale, t, s_eff))
    tau = np.asarray(cfg.ar.tau, dtype=float)
    eta = cfg.ar.eta
    z = rng.standard_normal(n + _BURN)

    if cfg.standardized_ar:
        z_path = _simulate_ar(eta, tau, z)
        z_pred = _ar_teacher_pred(eta, tau, z_path, _BURN)
        z_path = z_path[_BURN:]
        y = mu_s + sigma_s * z_path
        truth = SyntheticTruth(mu=mu_s + sigma_s * z_pred, sigma=sigma_s.copy(),
                               mu_seasonal=mu_s, sigma_seasonal=sigma_s)
    else:
        if cfg.garch is not None:
            g = cfg.garch
            sig_g2 = np.empty(n + _BURN)
            rho = np.empty(n + _BURN)
            sig_g2[0] = g.omega0 / (1.0 - g.omega1 - g.omega2) if g.omega0 > 0 else 1.0
            rho[0] = np.sqrt(sig_g2[0]) * z[0]
            for i in range(1, n + _BURN):
                sig_g2[i] = g.omega0 + g.omega1 * sig_g2[i - 1] + g.omega2 * rho[i - 1] ** 2
                rho[i] = np.sqrt(sig_g2[i]) * z[i]
            sig_g = np.sqrt(sig_g2[_BURN:])
            rho_path = rho
        else:
            sig_g = np.ones(n)
            rho_path = z
        # innovation scale during burn-in is frozen at the first day's sigma_S
        scale_path = np.concatenate([np.full(_BURN, sigma_s[0]), sigma_s])
        r_path = _simulate_ar(eta, tau, scale_path * rho_path)
        r_pred = _ar_teacher_pred(eta, tau, r_path, _BURN)
        r = r_path[_BURN:]
        y = mu_s + r
        truth = SyntheticTruth(mu=mu_s + r_pred, sigma=sigma_s * sig_g,
                               mu_seasonal=mu_s, sigma_seasonal=sigma_s)

    series = StationSeries.build(cfg.station_id, cfg.lead_time_h, dates, y, members)
    for arr in (truth.mu, truth.sigma, truth.mu_seasonal, truth.sigma_seasonal):
        arr.setflags(write=False)
    return series, truth


def write_truth_csv(dates, truth: SyntheticTruth, path, float_fmt: str = "%.9f") -> None:
    """Sidecar with the exact conditional truth, one row per date."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "mu", "sigma", "mu_seasonal", "sigma_seasonal"])
        for i, d in enumerate(np.asarray(dates, dtype="datetime64[D]")):
            writer.writerow([str(d),
                             float_fmt % truth.mu[i], float_fmt % truth.sigma[i],
                             float_fmt % truth.mu_seasonal[i], float_fmt % truth.sigma_seasonal[i]])
