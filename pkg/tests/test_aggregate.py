from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochcap.aggregate import aggregate_minutes, rolling_intervals
from stochcap.model import VehicleRecord

from conftest import make_minutes

T0 = datetime(2016, 10, 3, 7)


def veh(sec, speed, length=4.0):
    return VehicleRecord(T0 + timedelta(seconds=sec), 1, speed, length)


def test_harmonic_mean_two_speeds():
    (m,) = aggregate_minutes([veh(1, 60.0), veh(2, 120.0)])
    assert m.harmonic_mean_speed == pytest.approx(2 / (1 / 60 + 1 / 120))
    assert m.harmonic_mean_speed == pytest.approx(80.0)


def test_single_record():
    (m,) = aggregate_minutes([veh(1, 95.0)])
    assert m.harmonic_mean_speed == 95.0 and m.pce == 1


def test_truck_counts_double():
    (m,) = aggregate_minutes([veh(1, 80, 10.0), veh(2, 80, 4.0), veh(3, 80, 4.0)])
    assert m.pce == 4 and m.vehicle_count == 3


def test_empty_minutes_are_filled():
    ms = aggregate_minutes([veh(1, 80), veh(185, 90)])
    assert [m.pce for m in ms] == [1, 0, 0, 1]
    assert ms[1].harmonic_mean_speed is None
    assert aggregate_minutes([]) == []


def test_rolling_constant_speed():
    (w,) = rolling_intervals(make_minutes([80, 80, 80]), 3)
    assert w.mean_speed == 80.0


def test_rolling_skips_absent_speed():
    ms = make_minutes([60, 90, None], pce=[20, 20, 0])
    (w,) = rolling_intervals(ms, 3)
    assert w.mean_speed == pytest.approx((60 + 90) / 2)


def test_rolling_pce_sum():
    (w,) = rolling_intervals(make_minutes([90, 90, 90], pce=[30, 35, 40]), 3)
    assert w.pce == 105


def test_rolling_all_absent_and_short_series():
    (w,) = rolling_intervals(make_minutes([None, None]), 2)
    assert w.mean_speed is None
    assert rolling_intervals(make_minutes([90, 90]), 3) == []


def test_rolling_rejects_bad_width_and_gaps():
    with pytest.raises(ValueError):
        rolling_intervals(make_minutes([90] * 5), 0)
    ms = make_minutes([90] * 5)
    with pytest.raises(ValueError):
        rolling_intervals(ms[:2] + ms[3:], 2)


@given(st.floats(5.0, 200.0), st.integers(1, 30), st.integers(1, 6))
def test_constant_speed_is_exact(v, n, width):
    records = [veh(7 * i, v) for i in range(n)]
    minutes = aggregate_minutes(records)
    assert all(m.harmonic_mean_speed in (v, None) for m in minutes)
    for w in rolling_intervals(minutes, min(width, len(minutes))):
        assert w.mean_speed in (v, None)


@given(st.lists(st.floats(5.0, 200.0), min_size=1, max_size=20))
def test_harmonic_not_above_arithmetic(speeds):
    (m,) = aggregate_minutes([veh(i, v) for i, v in enumerate(speeds)])
    arith = float(np.mean(speeds))
    assert m.harmonic_mean_speed <= arith * (1 + 1e-12)
    if max(speeds) - min(speeds) > 1e-6 * max(speeds):
        assert m.harmonic_mean_speed < arith


@given(st.integers(1, 6), st.integers(1, 8), st.data())
def test_window_overlap_and_decimation(width, blocks, data):
    n = width * blocks
    pce = data.draw(st.lists(st.integers(0, 40), min_size=n, max_size=n))
    speeds = [90.0 if p else None for p in pce]
    ws = rolling_intervals(make_minutes(speeds, pce=pce), width)
    assert len(ws) == n - width + 1
    for a, b in zip(ws, ws[1:]):
        assert b.start - a.start == timedelta(minutes=1)
    assert sum(w.pce for w in ws[::width]) == sum(pce)
