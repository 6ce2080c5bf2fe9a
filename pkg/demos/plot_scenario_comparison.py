"""
Capacity gain from speed harmonisation
======================================

Two fitted capacity distributions, without and with variable speed limits,
are compared at fixed breakdown probabilities. The horizon transform then
turns per-minute probabilities into the chance of a breakdown within the
next hour.
"""

# %%
import numpy as np

import stochcap as sc

no_vsl = sc.WeibullParams(146.42, 6.75)
vsl = sc.WeibullParams(158.78, 6.86)
cmp = sc.compare_scenarios(no_vsl, vsl)
for p, a, b, r in zip(cmp.levels, cmp.intensity_a, cmp.intensity_b, cmp.rel_increase):
    print(f"P_B={p:<6} {a:7.1f} -> {b:7.1f} PCE/3min  (+{100 * r:.1f}%)")
print(f"median {cmp.median_a:.1f} -> {cmp.median_b:.1f}, mean gain {100 * cmp.mean_rel_increase:.1f}%")

# %%
# One hour at a steady flow
# -------------------------
flows = np.array([70.0, 80.0, 90.0, 100.0])
for label, params in (("no VSL", no_vsl), ("VSL", vsl)):
    probs = sc.breakdown_prob_over(flows, 60, params)
    print(label.ljust(7), " ".join(f"{p:6.3f}" for p in probs))

# %%
# Expected wait at 90 PCE/3min
# ----------------------------
mean, median = sc.time_to_breakdown_stats(90.0, no_vsl)
print(f"mean {mean:.0f} min, median {median:.0f} min")
