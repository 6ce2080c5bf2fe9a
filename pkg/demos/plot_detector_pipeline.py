"""
From detector events to a capacity distribution
================================================

A synthetic day of single-vehicle detector records is pushed through the
whole pipeline: cleaning, one-minute aggregation, breakdown detection and
finally a Weibull fit of the censored observations.
"""

# %%
# Fake detector events
# --------------------
# Demand ramps up through the morning. Whenever the flow over the last three
# minutes is high, traffic may collapse into a 20-minute jam at walking pace.
import io
from datetime import datetime, timedelta

import numpy as np

import stochcap as sc

rng = np.random.Generator(np.random.Philox(1))
truth = sc.WeibullParams(146.42, 6.75)
start = datetime(2016, 10, 3, 0, 0)

lines = ["timestamp,lane,speed_kmh,length_m,valid"]
jam_left = 0
recent = []
for minute in range(6 * 1440):
    rate = 26 + 12 * np.sin(2 * np.pi * (minute % 1440 - 360) / 1440)
    n = rng.poisson(max(rate, 1) * 0.85)
    lengths = np.where(rng.random(n) < 0.15, rng.uniform(10, 18, n), rng.uniform(3.5, 5.5, n))
    pce = int(n + np.sum(lengths > 9))
    if jam_left == 0 and len(recent) == 3 and rng.random() < sc.weibull_cdf(truth, sum(recent)):
        jam_left = 20
    base = rng.uniform(15, 30) if jam_left else rng.uniform(85, 110)
    jam_left = max(jam_left - 1, 0)
    recent = (recent + [pce])[-3:]
    for k, length in enumerate(lengths):
        t = start + timedelta(minutes=minute, seconds=float(rng.uniform(0, 60)))
        lines.append(f"{t.isoformat()},{1 + k % 2},{base + rng.normal(0, 3):.1f},{length:.1f},1")
events_csv = "\n".join(lines) + "\n"
print(f"{len(lines) - 1} vehicle records")

# %%
# Cleaning and aggregation
# ------------------------
parsed = sc.parse_events(io.StringIO(events_csv))
kept, summary = sc.filter_events(parsed.records)
minutes = sc.aggregate_minutes(kept)
print(summary)
print(f"{len(minutes)} one-minute intervals")

# %%
# Breakdown detection
# -------------------
# Each breakdown contributes the flow of the window just before it. Free-flow
# windows become censored records.
result = sc.classify_detailed(minutes, config=sc.ClassifierConfig(min_intensity=45))
obs = result.observations
print(f"{len(result.events)} breakdowns detected, {obs.n_breakdowns} recorded, "
      f"{obs.n_censored} censored records")

# %%
# Fitting
# -------
# The simulated jams come from a known distribution, so the fit can be held
# against the truth. Six days give only a rough estimate.
fit = sc.fit_mle(obs)
print(f"fitted  W({fit.params.scale:.1f}, {fit.params.shape:.2f})")
print(f"truth   W({truth.scale:.1f}, {truth.shape:.2f})")
