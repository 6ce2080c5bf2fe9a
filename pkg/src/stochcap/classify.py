"""Turn per-minute detector data into censored capacity observations.

The scan walks forward through the rolling windows. A window whose mean
speed falls below the breakdown speed marks a breakdown; the intensity of
the window ending just before the first slow minute becomes the single
uncensored record for that event. Everything from there until a recovery
window (mean speed above the recovery speed) is congestion and discarded.
Free-flow windows that pass the intensity and speed screens become
censored records.

Every observation pairs a window ``[t - W, t)`` with the outcome at minute
``t`` (its evaluation minute). Minute indices below are positions in the
contiguous minute series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .aggregate import check_contiguous, minute_arrays, rolling_sums
from .model import AggregatedInterval, ClassifierConfig, MinuteInterval, ObservationSet


@dataclass(frozen=True)
class BreakdownEvent:
    """One detected breakdown.

    ``onset`` is the first minute below the breakdown speed and
    ``test_minute`` the evaluation minute of the breakdown flow (one earlier
    when the queue-onset shift fired). Minutes ``[test_minute,
    congestion_end)`` are discarded. ``dropped`` names why no observation
    was recorded, or is None.
    """

    onset: int
    test_minute: int
    congestion_end: int
    intensity: Optional[int]
    dropped: Optional[str] = None


@dataclass(frozen=True)
class Classification:
    observations: ObservationSet
    events: Tuple[BreakdownEvent, ...]
    minute_starts: np.ndarray

    @property
    def recorded_events(self) -> List[BreakdownEvent]:
        return [e for e in self.events if e.dropped is None]

    @property
    def congestion_spans(self) -> List[Tuple[int, int]]:
        return [(e.test_minute, e.congestion_end) for e in self.events]


def _window_arrays(windows, minutes, width, name):
    expected = len(minutes) - width + 1
    if len(windows) != max(expected, 0):
        raise ValueError(f"{name}: expected {max(expected, 0)} windows, got {len(windows)}")
    for i, w in enumerate(windows):
        if w.width != width or w.start != minutes[i].start:
            raise ValueError(f"{name}: window {i} is not aligned with the minute grid")
    pce = np.array([w.pce for w in windows], dtype=np.int64)
    speed = np.array([np.nan if w.mean_speed is None else w.mean_speed for w in windows])
    return pce, speed


def classify_arrays(pce1: np.ndarray, v1: np.ndarray, config: ClassifierConfig = ClassifierConfig(),
                    windows=None, recovery=None):
    """Array form of :func:`classify`.

    Parameters
    ----------
    pce1, v1 : ndarray
        Per-minute PCE and harmonic mean speed (NaN where absent).
    windows, recovery : tuple of ndarray, optional
        Precomputed ``(pce, speed)`` of the breakdown and recovery windows.

    Returns
    -------
    obs_minutes : ndarray of int
        Evaluation minute of every observation, sorted.
    intensity : ndarray of int
    breakdown : ndarray of bool
    events : list of BreakdownEvent
    """
    cfg = config
    M = int(pce1.size)
    W, R = cfg.window_minutes, cfg.recovery_window
    p3, v3 = windows if windows is not None else rolling_sums(pce1, v1, W)
    _, v5 = recovery if recovery is not None else rolling_sums(pce1, v1, R)

    events: List[BreakdownEvent] = []
    prev_end = 0
    s = 0
    n_windows = v3.size
    while s < n_windows:
        if not v3[s] < cfg.breakdown_speed:
            s += 1
            continue
        slow = np.nonzero(v1[s:s + W] < cfg.breakdown_speed)[0]
        onset = s + int(slow[0])
        test = onset
        if (cfg.queue_onset_shift and onset - 1 >= prev_end
                and v1[onset - 1] < cfg.inconclusive_speed):
            test = onset - 1
        rec = np.nonzero(v5[onset:] > cfg.recovery_speed)[0]
        end = min(onset + int(rec[0]) + R, M) if rec.size else M

        start = test - W
        dropped, intensity = None, None
        if start < 0:
            dropped = "no_history"
        elif start < prev_end:
            dropped = "follows_congestion"
        elif np.isnan(v1[start:test]).any():
            dropped = "data_gap"
        else:
            intensity = int(p3[start])
            if intensity < cfg.min_intensity:
                dropped = "low_intensity"
        events.append(BreakdownEvent(onset, test, end, intensity, dropped))
        prev_end = end
        s = end

    congested = np.zeros(M, dtype=bool)
    for e in events:
        congested[e.test_minute:e.congestion_end] = True
    tainted = np.isnan(v1) | congested
    # dips into [breakdown_speed, inconclusive_speed) that are not part of a breakdown
    inconclusive = (v3 >= cfg.breakdown_speed) & (v3 < cfg.inconclusive_speed)
    for i in np.nonzero(inconclusive)[0]:
        if not congested[i:i + W].any():
            tainted[i:i + W] = True

    n_cand = M - W
    if n_cand > 0:
        clean = ~sliding_window_view(tainted, W + 1).any(axis=1)
        t = np.arange(n_cand) + W
        keep = (clean & (v3[:n_cand] >= cfg.inconclusive_speed)
                & (p3[:n_cand] >= cfg.min_intensity) & (t % cfg.eval_step_minutes == 0))
        cens_t = t[keep]
        cens_i = p3[:n_cand][keep]
    else:
        cens_t = cens_i = np.zeros(0, dtype=np.int64)

    rec_events = [e for e in events if e.dropped is None]
    brk_t = np.array([e.test_minute for e in rec_events], dtype=np.int64)
    brk_i = np.array([e.intensity for e in rec_events], dtype=np.int64)

    obs_t = np.concatenate([cens_t, brk_t])
    intensity = np.concatenate([cens_i, brk_i])
    breakdown = np.concatenate([np.zeros(cens_t.size, bool), np.ones(brk_t.size, bool)])
    order = np.argsort(obs_t, kind="stable")
    return obs_t[order], intensity[order], breakdown[order], events


def classify_detailed(minutes: Sequence[MinuteInterval],
                      windows: Optional[Sequence[AggregatedInterval]] = None,
                      recovery_windows: Optional[Sequence[AggregatedInterval]] = None,
                      config: ClassifierConfig = ClassifierConfig()) -> Classification:
    """Like :func:`classify` but also returns the breakdown event log."""
    check_contiguous(minutes)
    pce1, v1 = minute_arrays(minutes)
    w = r = None
    if windows is not None:
        w = _window_arrays(windows, minutes, config.window_minutes, "windows")
    if recovery_windows is not None:
        r = _window_arrays(recovery_windows, minutes, config.recovery_window, "recovery_windows")
    obs_t, intensity, breakdown, events = classify_arrays(pce1, v1, config, w, r)

    starts = np.array([m.start for m in minutes], dtype="datetime64[ms]")
    obs = ObservationSet(intensity, breakdown, starts[obs_t] if obs_t.size else starts[:0],
                         window_minutes=config.window_minutes,
                         eval_step_minutes=config.eval_step_minutes)
    return Classification(obs, tuple(events), starts)


def classify(minutes: Sequence[MinuteInterval],
             windows: Optional[Sequence[AggregatedInterval]] = None,
             recovery_windows: Optional[Sequence[AggregatedInterval]] = None,
             config: ClassifierConfig = ClassifierConfig()) -> ObservationSet:
    """Classify a contiguous minute series into an :class:`ObservationSet`.

    ``windows`` and ``recovery_windows`` are the rolling windows of
    ``config.window_minutes`` and ``config.recovery_window`` minutes built
    from the same minutes; they are computed when omitted.

    Rules, in the order the scan applies them:

    * a window with mean speed below ``breakdown_speed`` is a breakdown;
    * the first minute of that window below ``breakdown_speed`` is the
      onset; if the minute before it is already below
      ``inconclusive_speed`` the breakdown is dated one minute earlier;
    * the window ending just before the (possibly shifted) breakdown minute
      gives the breakdown flow. The event is dropped when that window
      starts before the data, overlaps the previous congestion, contains a
      minute without speed, or is below ``min_intensity``;
    * congestion lasts until the end of the first recovery window with
      mean speed above ``recovery_speed``;
    * a free-flow window becomes a censored record when its mean speed is
      at least ``inconclusive_speed``, its PCE is at least
      ``min_intensity``, and neither it nor its evaluation minute touches
      congestion, a minute without speed, or a window with mean speed in
      ``[breakdown_speed, inconclusive_speed)``.

    Raises
    ------
    ValueError
        If the windows are not aligned with ``minutes``.
    """
    return classify_detailed(minutes, windows, recovery_windows, config).observations
