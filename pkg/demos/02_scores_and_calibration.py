# The verification toolbox: proper scores, PIT, intervals, rank histograms.
#
# Run:  python3 demos/02_scores_and_calibration.py

import numpy as np
from scipy.special import ndtr

from enspost.scoring import (
    GaussianParams,
    central_interval,
    crps_ensemble,
    crps_integral,
    crps_normal,
    crpss,
    logs_normal,
    m_member_level,
    pit_normal,
    verification_rank,
)
from enspost.verify import rank_histogram

rng = np.random.default_rng(0)

# CRPS of a Gaussian forecast has a closed form; the quadrature of the
# defining integral is the independent cross-check.
g = GaussianParams(mu=2.0, sigma=1.5)
y = 3.2
closed = crps_normal(g, y)
quad = crps_integral(lambda z: ndtr((z - g.mu) / g.sigma), y, tol=1e-10)
print(f"CRPS closed form {closed:.8f} vs quadrature {quad:.8f} "
      f"(diff {abs(closed - quad):.2e})")

# The ensemble CRPS (energy form) is the same score applied to the
# empirical step CDF of the members.
members = rng.normal(g.mu, g.sigma, size=50)
print(f"50-member ensemble CRPS at y={y}: {crps_ensemble(members, y):.4f}")

print(f"LogS of the same forecast: {logs_normal(g, y):.4f}")
print(f"PIT value: {pit_normal(g, y):.4f}")

# Central prediction interval at the nominal coverage of a 50-member
# ensemble, (m-1)/(m+1) = 96.08%.
level = m_member_level(50)
lower, upper, width, covered = central_interval(g, level, y)
print(f"\n{level * 100:.2f}% interval: [{lower:.2f}, {upper:.2f}] "
      f"width {width:.2f}, covers y={y}: {covered}")

# Sharper forecasts are better only subject to calibration: halving sigma
# shrinks the width but the interval starts missing.
sharp = GaussianParams(g.mu, g.sigma / 2)
hits = 0
for _ in range(2000):
    draw = rng.normal(g.mu, g.sigma)
    lo, hi, _, cov = central_interval(sharp, level, draw)
    hits += cov
print(f"overconfident forecast: nominal {level * 100:.1f}% vs "
      f"empirical {100 * hits / 2000:.1f}% coverage")

# Verification ranks of a calibrated ensemble are uniform on 1..m+1.
m = 10
ranks = []
for _ in range(20000):
    draws = rng.normal(size=m + 1)
    ranks.append(verification_rank(draws[:m], draws[m], rng))
counts = rank_histogram(ranks, m)
print(f"\ncalibrated rank histogram (m={m}): {counts.tolist()}")

# An underdispersed ensemble piles ranks at the edges instead.
ranks = []
for _ in range(20000):
    truth_draw = rng.normal()
    ens = 0.5 * rng.normal(size=m)
    ranks.append(verification_rank(ens, truth_draw, rng))
counts = rank_histogram(ranks, m)
print(f"underdispersed rank histogram:    {counts.tolist()}")

# Skill scores compare a method to a reference forecast:
# CRPSS = 1 - CRPS / CRPS_ref.
print(f"\nCRPSS of 0.890 vs reference 1.165: {crpss(0.890, 1.165):.3f} "
      f"(23.6% improvement)")
