from datetime import datetime, timedelta

import numpy as np
import pytest

from stochcap.model import MinuteInterval, ObservationSet, WeibullParams

START = datetime(2016, 10, 3, 6, 0)

NO_VSL = WeibullParams(146.42, 6.75)
VSL = WeibullParams(158.78, 6.86)

_acceptance_lines = []


def make_minutes(speeds, pce=20, start=START):
    """Minute series from per-minute speeds; ``None`` makes an empty minute."""
    pce = np.broadcast_to(np.asarray(pce), (len(speeds),))
    out = []
    for i, (v, p) in enumerate(zip(speeds, pce)):
        if v is None:
            out.append(MinuteInterval(start + timedelta(minutes=i), 0, None, 0))
        else:
            out.append(MinuteInterval(start + timedelta(minutes=i), int(p), float(v), int(p)))
    return out


def make_obs(pairs, **kw):
    """ObservationSet from ``(intensity, breakdown)`` pairs."""
    if not pairs:
        return ObservationSet(np.zeros(0, int), np.zeros(0, bool), **kw)
    i, b = zip(*pairs)
    return ObservationSet(np.array(i), np.array(b, dtype=bool), **kw)


@pytest.fixture
def report_acceptance():
    def record(number, ok, detail):
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def random_trace(rng):
    """Random minute series with scripted congestion episodes.

    Returns ``(speeds, pce, truth)`` where ``truth`` lists, per episode, the
    minute whose breakdown flow should be recorded and its expected
    intensity, plus the set of genuinely congested minutes.
    """
    speeds, pce, truth, congested = [], [], [], set()

    def free(n, clean_tail=4):
        last_dip = -10
        for j in range(n):
            v = rng.uniform(80, 115)
            if j < n - clean_tail and j - last_dip >= 3:
                # single-minute dips never pull a 3-minute mean below 50 km/h
                u = rng.random()
                if u < 0.04:
                    v, last_dip = rng.uniform(42, 60), j
                elif u < 0.06:
                    v, last_dip = rng.uniform(25, 39), j
            speeds.append(v)
            pce.append(int(rng.integers(15, 36)))

    free(int(rng.integers(10, 60)))
    for _ in range(int(rng.integers(0, 5))):
        free(int(rng.integers(20, 120)))
        ramp = rng.random() < 0.4
        if ramp:
            speeds.append(rng.uniform(41, 49))
            pce.append(int(rng.integers(15, 36)))
        onset = len(speeds)
        test = onset - 1 if ramp else onset
        truth.append((test, sum(pce[test - 3:test])))
        for _ in range(int(rng.integers(6, 40))):
            congested.add(len(speeds))
            speeds.append(rng.uniform(3, 35))
            pce.append(int(rng.integers(5, 25)))
    free(int(rng.integers(20, 80)))
    return np.array(speeds), np.array(pce), truth, congested
