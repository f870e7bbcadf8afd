"""Simulated subjects for deterministic, headless sessions.

SimulatedSubject drives the scheduler from a virtual clock: stimulus
triggers cost no time, onsets are delayed by a configurable latency
profile, and responses come from a schedule keyed by trial id with
latencies measured from the actual stimulus onset.  Runs are
bit-deterministic: equal scripts, seeds and schedules give equal outcomes.

ScriptedWireClient is the same subject behind the wire protocol: it
connects to a serving engine, echoes onsets on its own virtual clock and
answers response windows from an ordered response list.  Headless and
wire-driven runs with matching inputs produce identical response files.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from websockets.sync.client import connect

from .errors import EngineError
from .model import InputDevice, Script
from .parser import decimal_value
from .protocol import (
    PROTOCOL_VERSION,
    Bye,
    Fault,
    Input,
    Onset,
    OpenWindow,
    Play,
    PresentImage,
    PresentText,
    Ready,
    SessionEnd,
    decode_message,
    encode_message,
)
from .scheduler import InputEvent
from .timing import LatencyProfile, Microseconds, VirtualClock, ms_to_us


def device_for_code(code: str) -> InputDevice:
    """Device class implied by a key-code name (BK_* is the button box)."""
    return InputDevice.BUTTON_BOX if code.startswith("BK_") else InputDevice.KEYBOARD


@dataclass(frozen=True, slots=True)
class ScheduleEntry:
    """Planned reaction for one trial; code None means no response."""

    trial_id: int
    code: str | None
    latency_ms: Fraction


def load_schedule(text: str) -> dict[int, ScheduleEntry]:
    """Parse a schedule table: ``trial_id,response_code,latency_ms`` lines.

    ``-`` as the response code means the subject never answers.  Blank
    lines and ``#`` comments are allowed.
    """
    entries: dict[int, ScheduleEntry] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise EngineError("E_SCHEDULE", f"line {lineno}: expected trial_id,response_code,latency_ms")
        if not parts[0].isdigit():
            raise EngineError("E_SCHEDULE", f"line {lineno}: bad trial id {parts[0]!r}")
        trial_id = int(parts[0])
        if trial_id in entries:
            raise EngineError("E_SCHEDULE", f"line {lineno}: duplicate trial {trial_id}")
        code = None if parts[1] == "-" else parts[1]
        try:
            latency = decimal_value(parts[2]) if code is not None else Fraction(0)
        except EngineError:
            raise EngineError("E_SCHEDULE", f"line {lineno}: bad latency {parts[2]!r}") from None
        if latency < 0:
            raise EngineError("E_SCHEDULE", f"line {lineno}: negative latency")
        entries[trial_id] = ScheduleEntry(trial_id, code, latency)
    return entries


def load_schedule_file(path: str | Path) -> dict[int, ScheduleEntry]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise EngineError("E_SCHEDULE", f"cannot read schedule {path}") from exc
    return load_schedule(text)


def check_schedule(schedule: dict[int, ScheduleEntry], script: Script) -> None:
    known = set(script.trial_ids())
    for trial_id in schedule:
        if trial_id not in known:
            raise EngineError("E_SCHEDULE", f"schedule references unknown trial {trial_id}")


class SimulatedSubject:
    """Subject port running entirely on a virtual clock.

    Scheduled responses are injected at the latest stimulus onset plus the
    entry's latency, mirroring a subject who reacts to what they heard or
    saw.  Absolute extra_events may be supplied for low-level window tests.
    """

    def __init__(
        self,
        schedule: dict[int, ScheduleEntry] | None = None,
        latency: LatencyProfile = LatencyProfile(),
        extra_events: list[InputEvent] | None = None,
        clock: VirtualClock | None = None,
    ):
        self.schedule = schedule or {}
        self.latency = latency
        self.clock = clock or VirtualClock()
        self.played: list[tuple[str, float, int, int]] = []
        self.presented: list[tuple[str, str]] = []
        self._queue: list[InputEvent] = sorted(extra_events or [], key=lambda e: e.client_ts)
        self._jitter_us = ms_to_us(latency.input_poll_jitter_ms)
        self._current: int | None = None
        self._pending: ScheduleEntry | None = None
        self._injected: InputEvent | None = None

    # -- stimulus side --

    def begin_trial(self, trial_id: int) -> None:
        self._current = trial_id
        self._pending = self.schedule.get(trial_id)
        self._injected = None

    def now(self) -> Microseconds:
        return self.clock.now()

    def _onset(self, latency_ms: float) -> Microseconds:
        # Triggering costs no virtual time; only the latency shifts the onset.
        onset = self.clock.now() + ms_to_us(latency_ms)
        if self._pending is not None and self._pending.code is not None:
            # A later stimulus re-anchors the not-yet-consumed response.
            if self._injected is not None:
                self._queue = [ev for ev in self._queue if ev is not self._injected]
            event = InputEvent(
                device=device_for_code(self._pending.code),
                code=self._pending.code,
                client_ts=onset + ms_to_us(self._pending.latency_ms),
            )
            self._queue.append(event)
            self._queue.sort(key=lambda e: e.client_ts)
            self._injected = event
        return onset

    def present_text(self, text: str, fmt) -> Microseconds:
        self.presented.append(("text", text))
        return self._onset(self.latency.display_latency_ms)

    def present_image(self, asset_id: str) -> Microseconds:
        self.presented.append(("image", asset_id))
        return self._onset(self.latency.display_latency_ms)

    def play(self, asset_id: str, gain: float, first: int, last: int) -> Microseconds:
        self.played.append((asset_id, gain, first, last))
        return self._onset(self.latency.play_latency_ms)

    # -- input side --

    def open_window(self, window_id: str) -> None:
        pass

    def next_input(self, open_ts: Microseconds, deadline: Microseconds | None) -> InputEvent | None:
        if not self._queue:
            if deadline is None:
                raise EngineError(
                    "E_STALL",
                    f"trial {self._current}: unbounded response window but the schedule has no response",
                )
            self.clock.advance_to(deadline)
            return None
        event = self._queue[0]
        if deadline is not None and event.client_ts > deadline:
            self.clock.advance_to(deadline)
            return None
        self._queue.pop(0)
        # Buffered capture: the event is retrieved a poll-jitter later than
        # it was timestamped; the timestamp itself is unaffected.
        self.clock.advance_to(event.client_ts + self._jitter_us)
        if event is self._injected:
            self._pending = None
            self._injected = None
        return event

    def wait_ms(self, ms: int) -> None:
        self.clock.advance(ms_to_us(ms))

    def end_session(self) -> None:
        pass


class ScriptedWireClient:
    """Protocol client that behaves like a SimulatedSubject over the wire.

    Responses are consumed in window-open order, so a plan-ordered list of
    (code, latency_ms) pairs scripted identically to a headless schedule
    reproduces the same reaction times.  The client clock starts at an
    arbitrary epoch to demonstrate that engine/client clock offset cancels.
    """

    def __init__(
        self,
        uri: str,
        responses: list[tuple[str | None, float]],
        audio_latency_ms: float | None = None,
        epoch_us: Microseconds = 5_000_000,
        disconnect_after_onsets: int | None = None,
    ):
        self.uri = uri
        self.responses = list(responses)
        self.audio_latency_ms = audio_latency_ms
        self.clock = VirtualClock(epoch_us)
        self.disconnect_after_onsets = disconnect_after_onsets
        self.preloaded: list[str] = []
        self.played: list[Play] = []
        self.presented: list[PresentText | PresentImage] = []
        self.faults: list[Fault] = []
        self.finished = False
        self._last_onset: Microseconds | None = None
        self._window_index = 0
        self._onsets_sent = 0

    def run(self) -> None:
        with connect(self.uri) as conn:
            conn.send(encode_message(Ready(PROTOCOL_VERSION, self.audio_latency_ms)))
            try:
                for raw in conn:
                    if self._handle(conn, decode_message(raw)):
                        break
            except Exception:
                if self.finished:
                    return
                raise

    def _handle(self, conn, msg) -> bool:
        if isinstance(msg, (PresentText, PresentImage, Play)):
            onset = self.clock.advance(1000)
            self._last_onset = onset
            if isinstance(msg, Play):
                self.played.append(msg)
            else:
                self.presented.append(msg)
            conn.send(encode_message(Onset(msg.id, onset)))
            self._onsets_sent += 1
            if self.disconnect_after_onsets is not None and self._onsets_sent >= self.disconnect_after_onsets:
                conn.close()
                return True
        elif isinstance(msg, OpenWindow):
            code, latency_ms = None, 0.0
            if self._window_index < len(self.responses):
                code, latency_ms = self.responses[self._window_index]
            self._window_index += 1
            if code is not None:
                anchor = self._last_onset if self._last_onset is not None else self.clock.now()
                ts = anchor + ms_to_us(latency_ms)
                conn.send(encode_message(Input(device_for_code(code), code, ts)))
        elif isinstance(msg, Fault):
            self.faults.append(msg)
            return True
        elif isinstance(msg, SessionEnd):
            self.finished = True
            conn.send(encode_message(Bye()))
            return True
        else:
            self.preloaded.append(getattr(msg, "asset_id", ""))
        return False

    def start(self) -> threading.Thread:
        thread = threading.Thread(target=self.run, daemon=True)
        thread.start()
        return thread
