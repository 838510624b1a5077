import numpy as np
import pytest

from enspost.data import StationSeries


def make_series(obs, members=None, station_id="T01", lead_time_h=24,
                start="2015-01-01", rng=None, m=8, spread=1.0):
    """StationSeries around given observations; members default to
    obs + spread * noise so ensemble invariants hold."""
    obs = np.asarray(obs, dtype=float)
    n = obs.size
    if members is None:
        rng = rng or np.random.default_rng(12345)
        center = np.where(np.isfinite(obs), obs, 0.0)
        members = center[:, None] + spread * rng.standard_normal((n, m))
    dates = np.datetime64(start, "D") + np.arange(n)
    return StationSeries.build(station_id, lead_time_h, dates, obs, members)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
