"""Command-line entry point: simulate | fit | predict | verify.

Runs are driven by a flat key=value config file; every key can be
overridden by a flag (flags win).  Exit codes: 0 success, 2 config error,
3 data error, 4 numerical failure.  Errors print a single machine-parsable
line ``error[<kind>]: message`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import models as model_api
from .data import (
    SyntheticConfig,
    generate_synthetic,
    impute_series,
    load_station_csv,
    write_station_csv,
    write_truth_csv,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    EnspostError,
    NumericError,
)
from .models import MODEL_KINDS, SEASONAL_KINDS, FittedModel
from .optimize import OptimizeSettings
from .scoring import crps_ensemble, m_member_level, score_cases
from .seasonal import SeasonalCoeffs
from .timeseries import ARCoeffs, GARCHCoeffs
from .verify import (
    ScoreTable,
    pit_histogram,
    residual_dependence_table,
    significance_matrix,
)

_CANONICAL_KINDS = {kind.lower(): kind for kind in MODEL_KINDS}
_DGP_KINDS = ("sar", "dar", "dar-garch")

_FLOAT_FMT = "%.6f"


@dataclass
class RunConfig:
    """Resolved run configuration shared by the subcommands."""

    data: str | None = None
    out: str | None = None
    models: list[str] = field(default_factory=lambda: list(MODEL_KINDS))
    leads: list[int] = field(default_factory=lambda: [24])
    stations: list[str] | None = None
    train_start: str | None = None
    train_end: str | None = None
    valid_start: str | None = None
    valid_end: str | None = None
    seed: int = 0
    max_iter: int = 500
    models_dir: str | None = None
    predictions: str | None = None
    # synthetic generation
    n_days: int = 2192
    n_stations: int = 1
    m_members: int = 50
    start_date: str = "2015-01-01"
    dgp: str = "sar"
    ens_bias: float = 1.5
    ens_dispersion: float = 0.6

    def settings(self) -> OptimizeSettings:
        return OptimizeSettings(max_iterations=self.max_iter)


_INT_KEYS = {"seed", "max_iter", "n_days", "n_stations", "m_members"}
_FLOAT_KEYS = {"ens_bias", "ens_dispersion"}
_LIST_KEYS = {"models", "leads", "stations"}


def parse_config_file(path) -> dict:
    """Flat key = value format; blank lines and # comments ignored."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _canonical_models(raw) -> list[str]:
    if isinstance(raw, str):
        raw = [v.strip() for v in raw.split(",") if v.strip()]
    if raw in (["all"], ["ALL"]):
        return list(MODEL_KINDS)
    out = []
    for name in raw:
        kind = _CANONICAL_KINDS.get(str(name).lower())
        if kind is None:
            raise ConfigError(f"unknown model {name!r}; known: {', '.join(MODEL_KINDS)}")
        out.append(kind)
    if not out:
        raise ConfigError("at least one model must be selected")
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    raw = parse_config_file(args.config) if getattr(args, "config", None) else {}
    for key, value in raw.items():
        if not hasattr(cfg, key) and key != "lead":
            raise ConfigError(f"unknown config key {key!r}")
        if key in _INT_KEYS:
            setattr(cfg, key, int(value))
        elif key in _FLOAT_KEYS:
            setattr(cfg, key, float(value))
        elif key in ("models",):
            cfg.models = _canonical_models(value)
        elif key in ("leads", "lead"):
            cfg.leads = [int(v) for v in value.split(",") if v.strip()]
        elif key == "stations":
            cfg.stations = [v.strip() for v in value.split(",") if v.strip()]
        else:
            setattr(cfg, key, value)
    # flags override file values
    for key in ("data", "out", "train_start", "train_end", "valid_start", "valid_end",
                "seed", "max_iter", "models_dir", "predictions", "n_days", "n_stations",
                "m_members", "start_date", "dgp", "ens_bias", "ens_dispersion"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "models", None):
        cfg.models = _canonical_models(args.models)
    if getattr(args, "lead", None):
        cfg.leads = [int(v) for v in str(args.lead).split(",") if v.strip()]
    if getattr(args, "stations", None):
        cfg.stations = [v.strip() for v in str(args.stations).split(",") if v.strip()]
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if not cfg.models:
        raise ConfigError("at least one model must be selected")
    if cfg.dgp not in _DGP_KINDS:
        raise ConfigError(f"dgp must be one of {_DGP_KINDS}, got {cfg.dgp!r}")
    if cfg.max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    for name in ("train_start", "train_end", "valid_start", "valid_end"):
        value = getattr(cfg, name)
        if value is not None:
            try:
                np.datetime64(value, "D")
            except ValueError:
                raise ConfigError(f"{name} is not an ISO date: {value!r}") from None
    if cfg.train_start and cfg.train_end and cfg.train_start > cfg.train_end:
        raise ConfigError("train_start must not be after train_end")
    if cfg.valid_start and cfg.valid_end and cfg.valid_start > cfg.valid_end:
        raise ConfigError("valid_start must not be after valid_end")
    if cfg.train_end and cfg.valid_start and cfg.valid_start <= cfg.train_end:
        raise ConfigError("validation range must start after the training range ends")


# ---------------------------------------------------------------------------
# synthetic world used by `simulate`
# ---------------------------------------------------------------------------


def synthetic_config(cfg: RunConfig, station_index: int, lead_index: int) -> SyntheticConfig:
    """Per-(station, lead) generation config; sub-seed derived from the run seed."""
    lead = cfg.leads[lead_index]
    common = dict(
        n_days=cfg.n_days,
        m=cfg.m_members,
        seed=cfg.seed + 1000 * station_index + lead_index,
        station_id=f"S{station_index + 1:02d}",
        lead_time_h=lead,
        start_date=cfg.start_date,
        ens_bias=cfg.ens_bias,
        ens_dispersion=cfg.ens_dispersion,
        loc=SeasonalCoeffs(0.0, 1.0, (2.0, 1.0, 0.3, 0.2)),
        scale=SeasonalCoeffs(-0.1, 0.25, (0.15, 0.1, 0.0, 0.0)),
    )
    if cfg.dgp == "sar":
        return SyntheticConfig(standardized_ar=True,
                               ar=ARCoeffs(1, 0.0, (0.6,)), **common)
    if cfg.dgp == "dar":
        return SyntheticConfig(standardized_ar=False,
                               ar=ARCoeffs(1, 0.0, (0.6,)), **common)
    return SyntheticConfig(standardized_ar=False,
                           ar=ARCoeffs(1, 0.0, (0.6,)),
                           garch=GARCHCoeffs(0.1, 0.55, 0.35), **common)


def _station_path(out: Path, station_id: str, lead: int) -> Path:
    return out / f"station_{station_id}_{lead}h.csv"


def cmd_simulate(cfg: RunConfig) -> int:
    if not cfg.out:
        raise ConfigError("simulate needs --out")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for si in range(cfg.n_stations):
        for li in range(len(cfg.leads)):
            syn = synthetic_config(cfg, si, li)
            series, truth = generate_synthetic(syn)
            write_station_csv(series, _station_path(out, syn.station_id, syn.lead_time_h))
            write_truth_csv(series.dates, truth,
                            out / f"truth_{syn.station_id}_{syn.lead_time_h}h.csv")
            print(f"simulate: wrote {syn.station_id} lead {syn.lead_time_h}h "
                  f"({series.n_days} days, {series.n_members} members)")
    return 0


# ---------------------------------------------------------------------------
# fit / predict / verify
# ---------------------------------------------------------------------------


def discover_cases(cfg: RunConfig) -> list[tuple[str, int, Path]]:
    """All (station, lead, file) combinations in the data directory that
    match the configured filters."""
    if not cfg.data:
        raise ConfigError("this command needs --data")
    root = Path(cfg.data)
    if not root.is_dir():
        raise DataError(f"data directory {root} does not exist")
    cases = []
    for path in sorted(root.glob("station_*.csv")):
        stem = path.stem[len("station_"):]
        station, _, lead_part = stem.rpartition("_")
        if not station or not lead_part.endswith("h"):
            raise DataError(f"cannot parse station/lead from file name {path.name}")
        lead = int(lead_part[:-1])
        if cfg.stations is not None and station not in cfg.stations:
            continue
        if cfg.leads and lead not in cfg.leads:
            continue
        cases.append((station, lead, path))
    if not cases:
        raise DataError(f"no station files in {root} match the filters")
    return cases


def _load_case(path: Path, station: str, lead: int):
    series = load_station_csv(path, station_id=station, lead_time_h=lead)
    return impute_series(series)


def _fit_path(out: Path, kind: str, station: str, lead: int) -> Path:
    return out / f"fit_{kind}_{station}_{lead}h.json"


def cmd_fit(cfg: RunConfig) -> int:
    if not cfg.out:
        raise ConfigError("fit needs --out")
    if not (cfg.train_start and cfg.train_end):
        raise ConfigError("fit needs --train-start and --train-end")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    settings = cfg.settings()
    warning_count = 0
    for station, lead, path in discover_cases(cfg):
        series = _load_case(path, station, lead)
        in_range = ((series.dates >= np.datetime64(cfg.train_start, "D"))
                    & (series.dates <= np.datetime64(cfg.train_end, "D")))
        if not in_range.any():
            raise DataError(f"training range contains no data for ({station}, {lead}h)")
        train = series.window(cfg.train_start, cfg.train_end)
        for kind in cfg.models:
            if kind in SEASONAL_KINDS:
                fitted = model_api.fit(kind, train, settings=settings)
            else:
                fitted = model_api.fit(kind, train)
            fitted.save(_fit_path(out, kind, station, lead))
            converged = fitted.meta.get("converged", True)
            if not converged:
                warning_count += 1
                print(f"fit: warning: {kind} on ({station}, {lead}h) did not converge",
                      file=sys.stderr)
            crps = fitted.meta.get("train_crps")
            crps_text = "" if crps is None else f" train CRPS {crps:.4f}"
            print(f"fit: {kind} ({station}, {lead}h) converged={converged}{crps_text}")
    if warning_count:
        print(f"fit: {warning_count} fit(s) flagged non-converged", file=sys.stderr)
    return 0


def _validation_dates(cfg: RunConfig, series) -> np.ndarray:
    if not (cfg.valid_start and cfg.valid_end):
        raise ConfigError("this command needs --valid-start and --valid-end")
    mask = ((series.dates >= np.datetime64(cfg.valid_start, "D"))
            & (series.dates <= np.datetime64(cfg.valid_end, "D")))
    dates = series.dates[mask]
    if dates.size == 0:
        raise DataError(f"no validation dates in [{cfg.valid_start}, {cfg.valid_end}]")
    return dates


def cmd_predict(cfg: RunConfig) -> int:
    if not cfg.out:
        raise ConfigError("predict needs --out")
    if not cfg.models_dir:
        raise ConfigError("predict needs --models-dir")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    models_dir = Path(cfg.models_dir)
    rows = []
    for station, lead, path in discover_cases(cfg):
        series = _load_case(path, station, lead)
        dates = _validation_dates(cfg, series)
        for kind in cfg.models:
            fit_file = _fit_path(models_dir, kind, station, lead)
            if not fit_file.exists():
                raise DataError(f"missing fitted model {fit_file}")
            fitted = FittedModel.load(fit_file)
            mu, sigma = model_api.predict(fitted, series, dates)
            for d, m_v, s_v in zip(dates, mu, sigma):
                rows.append((kind, station, lead, str(d), m_v, s_v))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    target = out / "predictions.csv"
    with open(target, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "station_id", "lead_time_h", "date", "mu", "sigma"])
        for kind, station, lead, date, mu_v, sigma_v in rows:
            writer.writerow([kind, station, lead, date, _FLOAT_FMT % mu_v, _FLOAT_FMT % sigma_v])
    print(f"predict: wrote {len(rows)} rows to {target}")
    return 0


def load_predictions(path) -> dict:
    """predictions.csv -> {(model, station, lead): (dates, mu, sigma)}."""
    grouped = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["model", "station_id", "lead_time_h", "date", "mu", "sigma"]:
            raise DataError(f"unexpected predictions header {header}")
        for row in reader:
            if not row:
                continue
            key = (row[0], row[1], int(row[2]))
            grouped.setdefault(key, []).append((np.datetime64(row[3], "D"),
                                                float(row[4]), float(row[5])))
    out = {}
    for key, entries in grouped.items():
        entries.sort(key=lambda e: e[0])
        dates = np.array([e[0] for e in entries], dtype="datetime64[D]")
        mu = np.array([e[1] for e in entries])
        sigma = np.array([e[2] for e in entries])
        out[key] = (dates, mu, sigma)
    return out


def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.out:
        raise ConfigError("verify needs --out")
    if not cfg.predictions:
        raise ConfigError("verify needs --predictions")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    predictions = load_predictions(cfg.predictions)
    if not predictions:
        raise DataError("predictions file is empty")

    cases = {(station, lead): path for station, lead, path in discover_cases(cfg)}
    unknown = {key[0] for key in predictions} - set(MODEL_KINDS)
    if unknown:
        raise DataError(f"predictions file names unknown models: {sorted(unknown)}")
    kinds = sorted({key[0] for key in predictions}, key=lambda k: MODEL_KINDS.index(k))
    cells = sorted({(key[1], key[2]) for key in predictions})

    table = ScoreTable()
    pit_by_model = {kind: [] for kind in kinds}
    raw_rows = []
    series_cache = {}
    for station, lead in cells:
        if (station, lead) not in cases:
            raise DataError(f"no data file for predicted case ({station}, {lead}h)")
        series = _load_case(cases[(station, lead)], station, lead)
        series_cache[(station, lead)] = series
        level = m_member_level(series.n_members)
        for kind in kinds:
            if (kind, station, lead) not in predictions:
                raise AlignmentError(f"method {kind} missing cell ({station}, {lead}h)")
            dates, mu, sigma = predictions[(kind, station, lead)]
            idx = np.searchsorted(series.dates, dates)
            if np.any(idx >= series.n_days) or not np.array_equal(series.dates[idx], dates):
                raise AlignmentError(f"predicted dates missing from data for ({station}, {lead}h)")
            y = series.obs[idx]
            sample = score_cases(mu, sigma, y, level)
            table.add_sample(kind, station, lead, sample, dates=dates)
            pit_by_model[kind].append(sample.pit)
        # raw-ensemble reference row on the same dates
        dates = predictions[(kinds[0], station, lead)][0]
        idx = np.searchsorted(series.dates, dates)
        members = series.members[idx]
        y = series.obs[idx]
        raw_crps = np.array([crps_ensemble(members[i], y[i]) for i in range(y.size)])
        lo = members.min(axis=1)
        hi = members.max(axis=1)
        raw_rows.append({
            "station": station, "lead": lead, "n": y.size,
            "crps": float(raw_crps.mean()),
            "rmse": float(np.sqrt(np.mean((series.ens_mean[idx] - y) ** 2))),
            "width": float(np.mean(hi - lo)),
            "coverage": float(100.0 * np.mean((lo <= y) & (y <= hi))),
        })

    table.to_csv(out / "scores.csv")
    with open(out / "scores_raw_ensemble.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "station_id", "lead_time_h", "n", "mean_crps",
                         "mean_logs", "rmse", "mean_width", "coverage_pct"])
        for row in raw_rows:
            writer.writerow(["raw-ensemble", row["station"], row["lead"], row["n"],
                             _FLOAT_FMT % row["crps"], "", _FLOAT_FMT % row["rmse"],
                             _FLOAT_FMT % row["width"], _FLOAT_FMT % row["coverage"]])

    matrix = significance_matrix(table, alpha=0.05)
    matrix.to_csv(out / "dm_matrix.csv")

    with open(out / "pit_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "n", "pit_variance"] + [f"bin{i + 1}" for i in range(10)])
        for kind in kinds:
            pit = np.concatenate(pit_by_model[kind])
            counts, variance = pit_histogram(pit, bins=10)
            writer.writerow([kind, pit.size, _FLOAT_FMT % variance] + list(counts))

    # residual dependence needs refitted training residuals
    if cfg.models_dir and cfg.train_start and cfg.train_end:
        residuals = {}
        for kind in kinds:
            if kind not in SEASONAL_KINDS:
                continue
            per_station = []
            for station, lead in cells:
                fit_file = _fit_path(Path(cfg.models_dir), kind, station, lead)
                if not fit_file.exists():
                    continue
                fitted = FittedModel.load(fit_file)
                series = series_cache[(station, lead)]
                train = series.window(cfg.train_start, cfg.train_end)
                per_station.append(training_residuals(fitted, train))
            if per_station:
                residuals[kind] = per_station
        if residuals:
            dependence = residual_dependence_table(residuals, lags=(1, 5, 10), alpha=0.05)
            with open(out / "residual_dependence.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["method", "lag", "pct_plain", "pct_squared"])
                for kind in dependence:
                    for lag, (pct_plain, pct_sq) in sorted(dependence[kind].items()):
                        writer.writerow([kind, lag, _FLOAT_FMT % pct_plain, _FLOAT_FMT % pct_sq])

    print(f"verify: wrote scores, DM matrix and PIT summary to {out}")
    return 0


def training_residuals(model: FittedModel, train_series) -> np.ndarray:
    """Standardized one-step training innovations of a static fit,
    recomputed from the stored coefficients."""
    from .models.semos import _evaluate  # local import avoids a cycle
    from .data import time_index
    from .seasonal import seasonal_design

    if model.kind not in SEASONAL_KINDS:
        raise DataError(f"{model.kind} does not expose training residuals")
    t = time_index(train_series.dates, model.meta["origin"])
    x_loc = seasonal_design(t, train_series.ens_mean)
    x_scale = seasonal_design(t, train_series.ens_sd)
    pieces = [model.loc, model.scale]
    p = 0
    if model.ar is not None:
        p = model.ar.p
        pieces.append(np.array([model.ar.eta, *model.ar.tau]))
    if model.garch is not None:
        pieces.append(np.sqrt([model.garch.omega0, model.garch.omega1, model.garch.omega2]))
    theta = np.concatenate(pieces)
    mu, sigma, start = _evaluate(model.kind, theta, p, x_loc, x_scale, train_series.obs)
    return (train_series.obs[start:] - mu) / sigma


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Argument errors share the single-line error[config] contract."""

    def error(self, message):
        print(f"error[config]: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="enspost",
        description="Postprocess ensemble temperature forecasts into calibrated "
                    "Gaussian predictive distributions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--data", help="directory with station_*.csv files")
        p.add_argument("--out", help="output directory")
        p.add_argument("--models", help="comma list of models or 'all'")
        p.add_argument("--lead", help="comma list of lead times in hours")
        p.add_argument("--stations", help="comma list of station ids")
        p.add_argument("--train-start", dest="train_start")
        p.add_argument("--train-end", dest="train_end")
        p.add_argument("--valid-start", dest="valid_start")
        p.add_argument("--valid-end", dest="valid_end")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-iter", dest="max_iter", type=int)

    p_sim = sub.add_parser("simulate", help="write synthetic station CSVs plus truth sidecars")
    add_common(p_sim)
    p_sim.add_argument("--n-days", dest="n_days", type=int)
    p_sim.add_argument("--n-stations", dest="n_stations", type=int)
    p_sim.add_argument("--m-members", dest="m_members", type=int)
    p_sim.add_argument("--start-date", dest="start_date")
    p_sim.add_argument("--dgp")
    p_sim.add_argument("--ens-bias", dest="ens_bias", type=float)
    p_sim.add_argument("--ens-dispersion", dest="ens_dispersion", type=float)

    p_fit = sub.add_parser("fit", help="fit models on the training range")
    add_common(p_fit)

    p_pred = sub.add_parser("predict", help="predict the validation range")
    add_common(p_pred)
    p_pred.add_argument("--models-dir", dest="models_dir", help="directory with fit_*.json")

    p_ver = sub.add_parser("verify", help="score predictions and run the test battery")
    add_common(p_ver)
    p_ver.add_argument("--predictions", help="predictions.csv from `predict`")
    p_ver.add_argument("--models-dir", dest="models_dir",
                       help="fitted models, enables the residual-dependence table")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits; keep main() returning a code
        return int(exc.code or 0)
    try:
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error[numeric]: {exc}", file=sys.stderr)
        return 4
    except EnspostError as exc:  # pragma: no cover - safety net
        print(f"error[internal]: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
