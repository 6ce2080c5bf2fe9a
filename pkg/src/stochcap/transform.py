"""Horizon probabilities, time to breakdown and scenario comparison.

Breakdown tests are independent Bernoulli trials every ``T_f`` minutes at
constant intensity, so survival over a horizon of ``T`` minutes is
``(1 - F(I)) ** (T / T_f)``. Intensities must be measured on the same
aggregation window the parameters were fitted on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .estimate import weibull_cdf
from .model import WeibullParams

#: Breakdown probability levels reported by :func:`compare_scenarios` by default.
DEFAULT_LEVELS = (0.001, 0.005, 0.01, 0.02, 0.05, 0.1)


def _trials(horizon, params: WeibullParams, eval_step, window):
    if window is not None and window != params.window_minutes:
        raise ValueError(
            f"intensity window {window} min does not match the {params.window_minutes} min "
            "window the parameters were fitted on")
    step = params.eval_step_minutes if eval_step is None else eval_step
    if step <= 0:
        raise ValueError("evaluation step must be positive")
    horizon = np.asarray(horizon, dtype=float)
    if np.any(horizon <= 0):
        raise ValueError("horizon must be positive")
    n = horizon / step
    if np.any(np.abs(n - np.round(n)) > 1e-9 * np.maximum(n, 1)):
        raise ValueError(f"horizon must be a multiple of the evaluation step ({step} min)")
    return np.round(n)


def _hazard_sum(intensity, horizon, params, eval_step, window):
    n = _trials(horizon, params, eval_step, window)
    x = np.asarray(intensity, dtype=float)
    if np.any(x < 0):
        raise ValueError("intensity must be non-negative")
    return n * (x / params.scale) ** params.shape


def breakdown_prob_over(intensity, horizon, params: WeibullParams,
                        eval_step: Optional[float] = None, window: Optional[int] = None):
    """Probability of at least one breakdown within ``horizon`` minutes.

    ``eval_step`` defaults to the parameters' evaluation step; passing
    ``window`` checks that the intensity was aggregated over the same
    window as the fit.
    """
    out = -np.expm1(-_hazard_sum(intensity, horizon, params, eval_step, window))
    return out if out.ndim else float(out)


def survival_prob_over(intensity, horizon, params: WeibullParams,
                       eval_step: Optional[float] = None, window: Optional[int] = None):
    """Probability of staying in free flow for ``horizon`` minutes."""
    out = np.exp(-_hazard_sum(intensity, horizon, params, eval_step, window))
    return out if out.ndim else float(out)


def time_to_breakdown_stats(intensity, params: WeibullParams,
                            eval_step: Optional[float] = None) -> Tuple[float, float]:
    """Mean and median time to breakdown in minutes at constant intensity.

    Raises
    ------
    ValueError
        If the breakdown probability at ``intensity`` is zero.
    """
    step = params.eval_step_minutes if eval_step is None else eval_step
    f = weibull_cdf(params, intensity)
    if f <= 0:
        raise ValueError("no finite expected time: breakdown probability is zero")
    mean = step / f
    return mean, mean * np.log(2.0)


def capacity_at_probability(params: WeibullParams, p):
    """Intensity at which the breakdown probability equals ``p``."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("probability must lie strictly between 0 and 1")
    out = params.scale * (-np.log1p(-p)) ** (1.0 / params.shape)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ScenarioComparison:
    """Capacity of two scenarios at matching breakdown probabilities.

    Relative differences are fractions of scenario A's intensity.
    """

    levels: np.ndarray
    intensity_a: np.ndarray
    intensity_b: np.ndarray
    median_a: float
    median_b: float

    @property
    def abs_increase(self) -> np.ndarray:
        return self.intensity_b - self.intensity_a

    @property
    def rel_increase(self) -> np.ndarray:
        return self.intensity_b / self.intensity_a - 1.0

    @property
    def mean_abs_increase(self) -> float:
        return float(self.abs_increase.mean())

    @property
    def mean_rel_increase(self) -> float:
        return float(self.rel_increase.mean())

    @property
    def median_rel_increase(self) -> float:
        return self.median_b / self.median_a - 1.0

    def rows(self) -> List[list]:
        """Table rows: one header row of levels, then one row per quantity."""
        return [
            ["breakdown_probability", *self.levels],
            ["intensity_a", *self.intensity_a],
            ["intensity_b", *self.intensity_b],
            ["absolute_increase", *self.abs_increase],
            ["relative_increase_pct", *(100 * self.rel_increase)],
        ]


def compare_scenarios(params_a: WeibullParams, params_b: WeibullParams,
                      levels: Sequence[float] = DEFAULT_LEVELS) -> ScenarioComparison:
    """Shift of the capacity distribution from scenario A to scenario B."""
    lv = np.asarray(levels, dtype=float)
    if lv.ndim != 1 or lv.size == 0:
        raise ValueError("need at least one probability level")
    return ScenarioComparison(
        levels=lv,
        intensity_a=np.atleast_1d(capacity_at_probability(params_a, lv)),
        intensity_b=np.atleast_1d(capacity_at_probability(params_b, lv)),
        median_a=params_a.median,
        median_b=params_b.median,
    )
