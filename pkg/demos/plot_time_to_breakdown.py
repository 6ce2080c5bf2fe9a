"""
Time to breakdown under a changing demand
=========================================

A plan of constant-flow segments is sampled many times. For a single
segment the sample mean settles on the closed form ``T_f / F(I)``.
"""

# %%
import math

import numpy as np

import stochcap as sc

params = sc.WeibullParams(146.42, 6.75)
flat = sc.sample_times_to_breakdown([(90.0, math.inf)], params, 20000, seed=1)
mean, median = sc.time_to_breakdown_stats(90.0, params)
print(f"closed form: mean {mean:.1f}, median {median:.1f} min")
print(f"sampled:     mean {flat.mean():.1f}, median {np.median(flat):.1f} min")

# %%
# A peak hour
# -----------
# Half an hour of moderate flow, then a peak, then the shoulder. Samples
# that survive the whole plan come back as NaN.
plan = [(65.0, 30), (85.0, 45), (70.0, 45)]
times = sc.sample_times_to_breakdown(plan, params, 20000, seed=2)
survived = np.isnan(times)
print(f"{100 * survived.mean():.1f}% of runs stay in free flow for the full two hours")
edges = np.cumsum([0] + [d for _, d in plan])
counts, _ = np.histogram(times[~survived], bins=edges)
for (flow, dur), c in zip(plan, counts):
    print(f"segment at {flow:5.1f}: {c / times.size:6.1%} of runs break down here")
