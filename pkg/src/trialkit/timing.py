"""Clocks, reaction-time arithmetic, gain and gating math.

Timestamps are integer microseconds on a monotonic clock.  The engine keeps
1 us internal resolution even though reported reaction times are whole
milliseconds; the clock contract is a resolution of 1 ms or better, checked
at startup rather than assumed.

Reaction times are computed from the *actual* stimulus onset reported by
the presentation layer, never from the time the command was issued, so
playback/display latency cancels out of the measurement.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

from .errors import EngineError

Microseconds = int

#: Upper bound the clock contract allows for timer resolution.
MAX_RESOLUTION_US = 1000


class MonotonicClock:
    """Wall clock immune to time-of-day adjustments, microsecond ticks."""

    def now(self) -> Microseconds:
        return time.monotonic_ns() // 1000


class VirtualClock:
    """Manually advanced clock for deterministic simulation."""

    def __init__(self, start: Microseconds = 0):
        self._now = start

    def now(self) -> Microseconds:
        return self._now

    def advance(self, delta_us: Microseconds) -> Microseconds:
        if delta_us < 0:
            raise ValueError("clock cannot run backwards")
        self._now += delta_us
        return self._now

    def advance_to(self, ts: Microseconds) -> Microseconds:
        # Never rewinds: targets in the past leave the clock untouched.
        if ts > self._now:
            self._now = ts
        return self._now


def measure_resolution(clock: MonotonicClock | VirtualClock | None = None, samples: int = 5000) -> Microseconds:
    """Smallest positive tick observed over consecutive reads, in us."""
    clock = clock or MonotonicClock()
    best: int | None = None
    last = clock.now()
    for _ in range(samples):
        current = clock.now()
        delta = current - last
        if delta > 0 and (best is None or delta < best):
            best = delta
        last = current
    return best if best is not None else 1


def ms_to_us(ms: int | float | str | Fraction) -> Microseconds:
    """Exact millisecond-to-microsecond conversion (floor for fractions)."""
    return int(Fraction(str(ms)) * 1000)


def compute_rtime(onset: Microseconds, response: Microseconds) -> int:
    """Reaction time in whole milliseconds, rounded half-up."""
    if response < onset:
        raise EngineError("E_CLOCK_ORDER", f"response at {response} precedes onset at {onset}")
    return (response - onset + 500) // 1000


def gain_from_db(volume_db: float) -> float:
    """Linear amplitude scale for a gain given in decibels."""
    return 10.0 ** (volume_db / 20.0)


def gate_bounds(
    sample_rate: int,
    sample_count: int,
    time_begin_ms: int | float | str | Fraction = 0,
    time_end_ms: int | float | str | Fraction | None = None,
) -> tuple[int, int]:
    """Sample-frame range [first, last) selected by a listening window.

    Bounds are positions in the source file; gating never resamples.
    The arithmetic is exact (no float rounding): floor(rate * ms / 1000).
    """
    begin = Fraction(str(time_begin_ms))
    if begin < 0:
        raise EngineError("E_GATE_RANGE", f"TIME_BEGIN must be non-negative, got {time_begin_ms}")
    first = math.floor(sample_rate * begin / 1000)
    if time_end_ms is None:
        last = sample_count
    else:
        end = Fraction(str(time_end_ms))
        if end <= begin:
            raise EngineError("E_GATE_RANGE", f"TIME_END {time_end_ms} must exceed TIME_BEGIN {time_begin_ms}")
        last = min(sample_count, math.floor(sample_rate * end / 1000))
    if first >= sample_count:
        raise EngineError("E_GATE_RANGE", f"TIME_BEGIN {time_begin_ms} ms is past the end of the file")
    return first, last


@dataclass(frozen=True, slots=True)
class LatencyProfile:
    """Simulated presentation-chain delays (all non-negative, in ms)."""

    play_latency_ms: float = 0.0
    display_latency_ms: float = 0.0
    input_poll_jitter_ms: float = 0.0

    def __post_init__(self) -> None:
        for name in ("play_latency_ms", "display_latency_ms", "input_poll_jitter_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
