"""One-minute aggregation and overlapping rolling windows."""

from __future__ import annotations

from datetime import timedelta
from typing import List, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ingest import pce_of
from .model import AggregatedInterval, MinuteInterval, VehicleRecord

MINUTE = timedelta(minutes=1)


def _floor_minute(ts):
    return ts.replace(second=0, microsecond=0)


def aggregate_minutes(records: Sequence[VehicleRecord]) -> List[MinuteInterval]:
    """Count PCE and take the harmonic mean speed per calendar minute.

    The output covers every minute from the first to the last record;
    minutes without vehicles have zero PCE and no speed. All lanes are
    pooled into one cross-section.
    """
    if not records:
        return []
    first = min(_floor_minute(r.timestamp) for r in records)
    last = max(_floor_minute(r.timestamp) for r in records)
    n = int((last - first) // MINUTE) + 1
    pce = np.zeros(n, dtype=np.int64)
    count = np.zeros(n, dtype=np.int64)
    inv_speed = np.zeros(n)
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for r in records:
        i = int((_floor_minute(r.timestamp) - first) // MINUTE)
        pce[i] += pce_of(r)
        count[i] += 1
        inv_speed[i] += 1.0 / r.speed
        lo[i] = min(lo[i], r.speed)
        hi[i] = max(hi[i], r.speed)
    out = []
    for i in range(n):
        if not count[i]:
            speed = None
        elif lo[i] == hi[i]:
            speed = float(lo[i])
        else:
            speed = float(count[i] / inv_speed[i])
        out.append(MinuteInterval(first + i * MINUTE, int(pce[i]), speed, int(count[i])))
    return out


def minute_arrays(minutes: Sequence[MinuteInterval]):
    """Return ``(pce, speed)`` arrays; absent speeds become NaN."""
    pce = np.array([m.pce for m in minutes], dtype=np.int64)
    speed = np.array([np.nan if m.harmonic_mean_speed is None else m.harmonic_mean_speed
                      for m in minutes], dtype=float)
    return pce, speed


def check_contiguous(minutes: Sequence[MinuteInterval]) -> None:
    for a, b in zip(minutes, minutes[1:]):
        if b.start - a.start != MINUTE:
            raise ValueError(f"minutes are not contiguous at {a.start} -> {b.start}")


def rolling_sums(pce: np.ndarray, speed: np.ndarray, width: int):
    """Window PCE sums and mean of present speeds for every full window.

    Returns arrays of length ``len(pce) - width + 1``; the mean speed is NaN
    where every member minute lacks a speed.
    """
    if width < 1:
        raise ValueError("width must be at least one minute")
    n = pce.size - width + 1
    if n <= 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    wp = sliding_window_view(pce, width).sum(axis=1)
    sv = sliding_window_view(speed, width)
    present = ~np.isnan(sv)
    k = present.sum(axis=1)
    total = np.where(present, sv, 0.0).sum(axis=1)
    lo = np.where(present, sv, np.inf).min(axis=1)
    hi = np.where(present, sv, -np.inf).max(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ws = np.where(k > 0, total / k, np.nan)
    # keep a constant speed exact instead of round-tripping through the sum
    ws = np.where(lo == hi, lo, ws)
    return wp, ws


def rolling_intervals(minutes: Sequence[MinuteInterval], width_minutes: int) -> List[AggregatedInterval]:
    """Overlapping windows of ``width_minutes`` advancing one minute at a time.

    Window PCE is the sum of member minutes; window speed is the arithmetic
    mean of the member minutes' harmonic means, ignoring minutes without a
    speed. Windows running past the last minute are not produced.
    """
    if width_minutes < 1:
        raise ValueError("width must be at least one minute")
    check_contiguous(minutes)
    pce, speed = minute_arrays(minutes)
    wp, ws = rolling_sums(pce, speed, width_minutes)
    return [
        AggregatedInterval(minutes[i].start, width_minutes, int(wp[i]),
                           None if np.isnan(ws[i]) else float(ws[i]))
        for i in range(wp.size)
    ]
