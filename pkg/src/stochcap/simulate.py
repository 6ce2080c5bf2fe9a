"""Synthetic observations with a known capacity distribution, and
Monte Carlo times to breakdown.

All randomness comes from a Philox counter-based generator built from the
seed alone, so a seed fully determines the output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

from .estimate import weibull_cdf
from .model import ObservationSet, WeibullParams

DEFAULT_START = np.datetime64("2016-01-01T00:00", "ms")


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class DemandConfig:
    """Per-minute arrival rate (PCE/min) as a bounded mean-reverting walk.

    The latent rate is ``mean(t) + y(t)`` with ``y`` an AR(1) process that
    decays by ``reversion`` per minute and receives Gaussian shocks of
    standard deviation ``volatility``. ``daily_amplitude`` adds a 24-hour
    sinusoid to the mean. The rate is clipped to ``[lower, upper]`` and
    minute counts are Poisson draws from it (or the rounded rate when
    ``poisson`` is False).
    """

    mean: float = 22.0
    volatility: float = 1.0
    reversion: float = 0.05
    lower: float = 0.0
    upper: float = 60.0
    daily_amplitude: float = 0.0
    poisson: bool = True

    def __post_init__(self):
        if not (0 <= self.lower < self.upper):
            raise ValueError(f"invalid demand bounds [{self.lower}, {self.upper}]")
        if not (self.lower <= self.mean <= self.upper):
            raise ValueError("demand mean must lie within the bounds")
        if self.volatility < 0 or not (0 < self.reversion <= 1):
            raise ValueError("need volatility >= 0 and 0 < reversion <= 1")

    @classmethod
    def constant(cls, pce_per_minute: float) -> "DemandConfig":
        """Deterministic demand of exactly ``round(pce_per_minute)`` PCE every minute."""
        return cls(mean=pce_per_minute, volatility=0.0, lower=0.0,
                   upper=max(pce_per_minute, 1.0), poisson=False)

    def minute_counts(self, n: int, rng: np.random.Generator) -> np.ndarray:
        phi = 1.0 - self.reversion
        shocks = rng.standard_normal(n)
        y0 = rng.standard_normal() * self.volatility / np.sqrt(max(1 - phi * phi, 1e-12))
        y, _ = lfilter([self.volatility], [1.0, -phi], shocks, zi=[phi * y0])
        t = np.arange(n)
        level = self.mean + self.daily_amplitude * np.sin(2 * np.pi * t / 1440.0)
        rate = np.clip(level + y, self.lower, self.upper)
        if self.poisson:
            return rng.poisson(rate).astype(np.int64)
        return np.round(rate).astype(np.int64)


def synth_observations(true_params: WeibullParams, demand: DemandConfig, duration_minutes: int,
                       seed, congestion_minutes: int = 15, min_intensity: int = 1,
                       start: np.datetime64 = DEFAULT_START
                       ) -> Tuple[ObservationSet, List[dict]]:
    """Draw an observation set from a known capacity distribution.

    Every evaluation minute ``t`` the intensity of the window ``[t - W, t)``
    is tested: a breakdown happens with probability ``F(I)``. A breakdown
    yields one uncensored record, then ``congestion_minutes`` minutes are
    discarded and testing resumes once a full window of post-congestion
    minutes is available. Other tests yield censored records. Records below
    ``min_intensity`` are not kept, although a breakdown there still starts
    a congestion.

    Returns
    -------
    obs : ObservationSet
    events : list of dict
        One entry per breakdown with ``minute``, ``timestamp``,
        ``intensity`` and ``recorded``.
    """
    W, step = true_params.window_minutes, true_params.eval_step_minutes
    if duration_minutes < W + 1:
        raise ValueError("duration must exceed the aggregation window")
    if congestion_minutes < 0:
        raise ValueError("congestion_minutes must be non-negative")
    rng = make_rng(seed)
    counts = demand.minute_counts(duration_minutes, rng)
    # window ending just before minute t, for t = W .. duration-1
    intensity = sliding_window_view(counts, W).sum(axis=1)[:-1]
    t = np.arange(W, duration_minutes)
    u = rng.random(t.size)
    on_grid = t % step == 0
    t, intensity, u = t[on_grid], intensity[on_grid], u[on_grid]
    hit = u < weibull_cdf(true_params, intensity)

    keep = np.ones(t.size, dtype=bool)
    brk = np.zeros(t.size, dtype=bool)
    next_allowed = W
    for i in np.nonzero(hit)[0]:
        if t[i] < next_allowed:
            continue
        brk[i] = True
        resume = t[i] + 1 if congestion_minutes == 0 else t[i] + congestion_minutes + W
        lo, hi = np.searchsorted(t, [t[i] + 1, resume])
        keep[lo:hi] = False
        next_allowed = resume

    floor = max(int(min_intensity), 1)
    recorded = keep & (intensity >= floor)
    ts = start + t.astype("timedelta64[m]")
    events = [
        {"minute": int(t[i]), "timestamp": str(ts[i]), "intensity": int(intensity[i]),
         "recorded": bool(recorded[i])}
        for i in np.nonzero(brk)[0]
    ]
    obs = ObservationSet(intensity[recorded], brk[recorded], ts[recorded],
                         window_minutes=W, eval_step_minutes=step)
    return obs, events


def _check_plan(plan):
    plan = [(float(i), float(d)) for i, d in plan]
    if not plan:
        raise ValueError("intensity plan is empty")
    for i, d in plan:
        if i < 0 or d <= 0:
            raise ValueError("plan segments need non-negative intensity and positive duration")
    return plan


def simulate_time_to_breakdown(plan: Sequence[Tuple[float, float]], params: WeibullParams,
                               eval_step: Optional[float] = None, seed=None) -> Optional[float]:
    """Random breakdown time (minutes from plan start) for a piecewise-constant plan.

    ``plan`` is a list of ``(intensity, duration)`` segments; a duration
    may be ``inf``. Each segment draws a fresh exponential time with rate
    ``F(I) / T_f``; if it falls inside the segment that is the breakdown,
    otherwise the next segment starts over. Returns None if every segment
    survives.
    """
    plan = _check_plan(plan)
    step = params.eval_step_minutes if eval_step is None else eval_step
    rng = make_rng(seed)
    elapsed = 0.0
    for intensity, duration in plan:
        f = weibull_cdf(params, intensity)
        if f > 0:
            wait = rng.exponential(step / f)
            if wait < duration:
                return elapsed + wait
        elapsed += duration
    return None


def sample_times_to_breakdown(plan: Sequence[Tuple[float, float]], params: WeibullParams,
                              n: int, eval_step: Optional[float] = None, seed=None) -> np.ndarray:
    """``n`` independent breakdown times for ``plan``; NaN marks survival."""
    plan = _check_plan(plan)
    step = params.eval_step_minutes if eval_step is None else eval_step
    rng = make_rng(seed)
    out = np.full(n, np.nan)
    elapsed = 0.0
    for intensity, duration in plan:
        f = weibull_cdf(params, intensity)
        pending = np.isnan(out)
        if f > 0 and pending.any():
            wait = rng.exponential(step / f, size=int(pending.sum()))
            idx = np.nonzero(pending)[0]
            hit = wait < duration
            out[idx[hit]] = elapsed + wait[hit]
        elapsed += duration
    return out
