"""Value types shared across the package.

Everything here is immutable after construction. Array-backed types mark
their arrays read-only so they can be passed between threads or processes
without defensive copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterator, Optional, Sequence

import numpy as np


def _frozen(a, dtype=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class VehicleRecord:
    """One detector event."""

    timestamp: datetime
    lane: int
    speed: float  # km/h
    length: float  # m
    valid: bool = True


@dataclass(frozen=True)
class MinuteInterval:
    """Detector counts for one calendar minute.

    ``harmonic_mean_speed`` is ``None`` exactly when no vehicle passed.
    """

    start: datetime
    pce: int
    harmonic_mean_speed: Optional[float]
    vehicle_count: int

    def __post_init__(self):
        if self.vehicle_count < 0 or self.pce < self.vehicle_count or self.pce > 2 * self.vehicle_count:
            raise ValueError(
                f"inconsistent counts: pce={self.pce}, vehicles={self.vehicle_count}")
        if (self.harmonic_mean_speed is None) != (self.vehicle_count == 0):
            raise ValueError("speed must be absent iff the minute has no vehicles")


@dataclass(frozen=True)
class AggregatedInterval:
    """A rolling window of ``width`` whole minutes, labelled by its first minute."""

    start: datetime
    width: int
    pce: int
    mean_speed: Optional[float]

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("width must be at least one minute")


@dataclass(frozen=True)
class Observation:
    """A single intensity record with its outcome.

    ``breakdown`` is the failure indicator: True for a breakdown flow
    (uncensored), False for a free-flow record that survived (censored).
    """

    intensity: int
    breakdown: bool
    timestamp: Optional[np.datetime64] = None


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Censored and uncensored intensity records feeding the estimators.

    Parameters
    ----------
    intensity : array_like of int
        PCE per aggregation window for every record.
    breakdown : array_like of bool
        Failure indicator per record.
    timestamp : array_like of datetime64, optional
        Evaluation minute of each record.
    window_minutes : int
        Aggregation window length the intensities refer to.
    eval_step_minutes : int
        Spacing of the breakdown tests.
    """

    intensity: np.ndarray
    breakdown: np.ndarray
    timestamp: Optional[np.ndarray] = None
    window_minutes: int = 3
    eval_step_minutes: int = 1

    def __post_init__(self):
        intensity = _frozen(self.intensity, dtype=np.int64).reshape(-1)
        breakdown = _frozen(self.breakdown, dtype=bool).reshape(-1)
        if intensity.shape != breakdown.shape:
            raise ValueError("intensity and breakdown must have the same length")
        if intensity.size and intensity.min() <= 0:
            raise ValueError("intensities must be positive")
        object.__setattr__(self, "intensity", intensity)
        object.__setattr__(self, "breakdown", breakdown)
        if self.timestamp is not None:
            ts = _frozen(self.timestamp, dtype="datetime64[ms]").reshape(-1)
            if ts.shape != intensity.shape:
                raise ValueError("timestamp must match intensity length")
            object.__setattr__(self, "timestamp", ts)
        if self.window_minutes < 1 or self.eval_step_minutes < 1:
            raise ValueError("window and evaluation step must be positive")

    @classmethod
    def from_observations(cls, observations: Sequence[Observation], window_minutes=3,
                          eval_step_minutes=1) -> "ObservationSet":
        ts = None
        if observations and all(o.timestamp is not None for o in observations):
            ts = [o.timestamp for o in observations]
        return cls(
            intensity=[o.intensity for o in observations],
            breakdown=[o.breakdown for o in observations],
            timestamp=ts,
            window_minutes=window_minutes,
            eval_step_minutes=eval_step_minutes,
        )

    def __len__(self) -> int:
        return int(self.intensity.size)

    def __iter__(self) -> Iterator[Observation]:
        ts = self.timestamp
        for i in range(len(self)):
            yield Observation(int(self.intensity[i]), bool(self.breakdown[i]),
                              None if ts is None else ts[i])

    def __eq__(self, other):
        if not isinstance(other, ObservationSet):
            return NotImplemented
        same_ts = (self.timestamp is None and other.timestamp is None) or (
            self.timestamp is not None and other.timestamp is not None
            and np.array_equal(self.timestamp, other.timestamp))
        return (np.array_equal(self.intensity, other.intensity)
                and np.array_equal(self.breakdown, other.breakdown)
                and same_ts
                and self.window_minutes == other.window_minutes
                and self.eval_step_minutes == other.eval_step_minutes)

    @property
    def n_breakdowns(self) -> int:
        return int(self.breakdown.sum())

    @property
    def n_censored(self) -> int:
        return len(self) - self.n_breakdowns

    @property
    def intensity_min(self) -> Optional[int]:
        return int(self.intensity.min()) if len(self) else None

    @property
    def intensity_max(self) -> Optional[int]:
        return int(self.intensity.max()) if len(self) else None

    def level_counts(self):
        """Return ``(levels, breakdowns, censored)`` over the observed integer levels."""
        levels, inverse = np.unique(self.intensity, return_inverse=True)
        brk = np.bincount(inverse, weights=self.breakdown, minlength=levels.size)
        tot = np.bincount(inverse, minlength=levels.size)
        return levels, brk.astype(np.int64), (tot - brk).astype(np.int64)


@dataclass(frozen=True)
class WeibullParams:
    """Two-parameter Weibull capacity distribution.

    ``window_minutes`` and ``eval_step_minutes`` record which aggregation
    window and test spacing the parameters were fitted on; the horizon
    transforms refuse intensities from a different window.
    """

    scale: float
    shape: float
    window_minutes: int = 3
    eval_step_minutes: int = 1

    def __post_init__(self):
        if not (self.scale > 0 and self.shape > 0):
            raise ValueError(f"Weibull parameters must be positive, got {self.scale}, {self.shape}")
        if not (np.isfinite(self.scale) and np.isfinite(self.shape)):
            raise ValueError("Weibull parameters must be finite")

    @property
    def median(self) -> float:
        return self.scale * np.log(2.0) ** (1.0 / self.shape)


@dataclass(frozen=True, eq=False)
class StepSurvivalFunction:
    """Product-limit survival estimate over integer intensity levels.

    One row per level with at least one breakdown. Each row covers the
    closed range ``[level_from, level_to]`` up to the next breakdown level,
    which is how levels without breakdowns get grouped.

    Attributes
    ----------
    level_from, level_to : ndarray of int
        Grouped intensity range of each step.
    events : ndarray of int
        Breakdowns at ``level_from``.
    at_risk : ndarray of int
        Records with intensity >= ``level_from``.
    exposure : ndarray of int
        Records observed exactly at ``level_from``.
    exposure_group : ndarray of int
        Records observed anywhere in ``[level_from, level_to]``.
    survival : ndarray of float
        Running product of the partial survival probabilities.
    """

    level_from: np.ndarray
    level_to: np.ndarray
    events: np.ndarray
    at_risk: np.ndarray
    exposure: np.ndarray
    exposure_group: np.ndarray
    survival: np.ndarray

    def __post_init__(self):
        for name in ("level_from", "level_to", "events", "at_risk", "exposure", "exposure_group"):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype=np.int64))
        object.__setattr__(self, "survival", _frozen(self.survival, dtype=float))
        s = self.survival
        if s.size and (np.any(np.diff(s) > 0) or s.min() < 0 or s.max() > 1):
            raise ValueError("survival values must be non-increasing and within [0, 1]")

    def __len__(self):
        return int(self.level_from.size)

    @property
    def partial_failure(self) -> np.ndarray:
        return self.events / self.at_risk

    @property
    def partial_survival(self) -> np.ndarray:
        return 1.0 - self.partial_failure

    def __call__(self, intensity):
        """Evaluate the right-continuous step survival function at ``intensity``."""
        x = np.asarray(intensity, dtype=float)
        if not len(self):
            vals = np.ones_like(x)
        else:
            idx = np.searchsorted(self.level_from, x, side="right") - 1
            vals = np.where(idx >= 0, self.survival[np.clip(idx, 0, None)], 1.0)
        return vals if vals.ndim else float(vals)


@dataclass(frozen=True, eq=False)
class CfbCurve:
    """Cumulative frequency of breakdowns over a contiguous integer level domain.

    ``breakdowns`` holds the per-level counts (observed, or expected for a
    predicted curve); ``cumulative`` is their running sum.
    """

    levels: np.ndarray
    breakdowns: np.ndarray
    exposure: np.ndarray
    predicted: bool
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        levels = _frozen(self.levels, dtype=np.int64)
        if levels.size and np.any(np.diff(levels) != 1):
            raise ValueError("CF_B levels must be contiguous integers")
        b = _frozen(self.breakdowns, dtype=float)
        r = _frozen(self.exposure, dtype=np.int64)
        if not (levels.shape == b.shape == r.shape):
            raise ValueError("levels, breakdowns and exposure must align")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "breakdowns", b)
        object.__setattr__(self, "exposure", r)
        object.__setattr__(self, "cumulative", _frozen(np.cumsum(b)))

    def __len__(self):
        return int(self.levels.size)


@dataclass(frozen=True)
class ErrorReport:
    """Goodness of fit of a predicted CF_B curve.

    ``are`` and ``awre`` are percentages. ``n`` counts all compared levels
    (the RMSE denominator); ``n_relative`` counts the levels with a non-zero
    empirical CF_B that enter the relative errors.
    """

    sse: float
    rmse: float
    are: float
    awre: float
    n: int
    n_relative: int


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds for turning minute data into observations.

    Speeds in km/h, intensities in PCE per aggregation window, durations in
    minutes.
    """

    breakdown_speed: float = 40.0
    recovery_speed: float = 70.0
    recovery_window: int = 5
    inconclusive_speed: float = 50.0
    min_intensity: int = 45
    window_minutes: int = 3
    eval_step_minutes: int = 1
    queue_onset_shift: bool = True

    def __post_init__(self):
        if not (0 < self.breakdown_speed < self.inconclusive_speed < self.recovery_speed):
            raise ValueError("need 0 < breakdown_speed < inconclusive_speed < recovery_speed")
        if self.recovery_window < 1 or self.window_minutes < 1 or self.eval_step_minutes < 1:
            raise ValueError("window lengths and evaluation step must be positive")
        if self.min_intensity < 1:
            raise ValueError("min_intensity must be positive")
