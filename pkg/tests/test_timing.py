from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trialkit.errors import EngineError
from trialkit.timing import (
    MAX_RESOLUTION_US,
    LatencyProfile,
    MonotonicClock,
    VirtualClock,
    compute_rtime,
    gain_from_db,
    gate_bounds,
    measure_resolution,
    ms_to_us,
)

mpmath.mp.dps = 50


def oracle_gain(db) -> float:
    return float(mpmath.power(10, mpmath.mpf(db) / 20))


# --- reaction time -------------------------------------------------------

def test_rtime_values():
    assert compute_rtime(0, 748_000) == 748
    assert compute_rtime(5, 5) == 0
    assert compute_rtime(0, 499) == 0
    assert compute_rtime(0, 500) == 1  # half-up
    assert compute_rtime(0, 1499) == 1
    assert compute_rtime(0, 1500) == 2


def test_rtime_rejects_backwards_clock():
    with pytest.raises(EngineError) as err:
        compute_rtime(10, 9)
    assert err.value.code == "E_CLOCK_ORDER"


@given(st.integers(0, 10**12), st.integers(0, 10**9))
def test_rtime_matches_decimal_rounding(onset, delta):
    expected = math.floor(Fraction(delta, 1000) + Fraction(1, 2))
    assert compute_rtime(onset, onset + delta) == expected


# --- gain ----------------------------------------------------------------

def test_gain_identity_and_reference_points():
    assert gain_from_db(0) == 1.0
    assert abs(gain_from_db(-3) - 0.70795) < 1e-5
    assert abs(gain_from_db(-6) - 0.50119) < 1e-5
    assert abs(gain_from_db(-3) - oracle_gain(-3)) < 1e-12


@given(st.floats(-60, 20), st.floats(-60, 20))
def test_gain_additivity(a, b):
    combined = gain_from_db(a + b)
    product = gain_from_db(a) * gain_from_db(b)
    assert abs(combined - product) <= 1e-9 * max(combined, product)


@given(st.floats(-60, 19.9), st.floats(0.01, 10))
def test_gain_strictly_increasing(db, step):
    assert gain_from_db(db) < gain_from_db(db + step)


# --- gating --------------------------------------------------------------

def test_gate_documented_ranges():
    assert gate_bounds(44100, 1_000_000, 0, 250) == (0, 11025)
    assert gate_bounds(16000, 1_000_000, 0, 200) == (0, 3200)


def test_gate_no_end_plays_full_file():
    assert gate_bounds(44100, 4800, 0, None) == (0, 4800)


def test_gate_end_clamped_to_file():
    assert gate_bounds(16000, 3000, 0, 500) == (0, 3000)


def test_gate_begin_past_end_of_file():
    with pytest.raises(EngineError) as err:
        gate_bounds(16000, 1600, 200, None)
    assert err.value.code == "E_GATE_RANGE"


def test_gate_end_not_after_begin():
    with pytest.raises(EngineError):
        gate_bounds(16000, 160000, 250, 250)
    with pytest.raises(EngineError):
        gate_bounds(16000, 160000, 250, 100)


def test_gate_fractional_milliseconds_exact():
    # 44100 * 0.5 / 1000 = 22.05 -> 22
    assert gate_bounds(44100, 1000, "0.5", None)[0] == 22


@given(
    st.sampled_from([8000, 16000, 22050, 44100, 48000]),
    st.integers(0, 2000),
    st.integers(1, 2000),
)
def test_gate_length_conservation(rate, begin_ms, extra_ms):
    end_ms = begin_ms + extra_ms
    sample_count = math.ceil(rate * (end_ms + 1) / 1000) + 1  # end within file
    first, last = gate_bounds(rate, sample_count, begin_ms, end_ms)
    assert last - first == rate * end_ms // 1000 - rate * begin_ms // 1000


# --- clocks --------------------------------------------------------------

def test_virtual_clock_advances_only_forward():
    clock = VirtualClock()
    assert clock.now() == 0
    clock.advance(1500)
    assert clock.now() == 1500
    clock.advance_to(1000)  # never rewinds
    assert clock.now() == 1500
    clock.advance_to(2000)
    assert clock.now() == 2000
    with pytest.raises(ValueError):
        clock.advance(-1)


def test_monotonic_clock_is_nondecreasing_and_fine_grained():
    clock = MonotonicClock()
    readings = [clock.now() for _ in range(1000)]
    assert readings == sorted(readings)
    assert measure_resolution(clock) <= MAX_RESOLUTION_US


def test_ms_to_us_exact():
    assert ms_to_us(2000) == 2_000_000
    assert ms_to_us("0.5") == 500
    assert ms_to_us(Fraction(5, 2)) == 2500


def test_latency_profile_rejects_negative():
    with pytest.raises(ValueError):
        LatencyProfile(play_latency_ms=-1)
