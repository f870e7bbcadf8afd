"""Trial planning and execution against abstract stimulus/input ports.

The executor is a single logical control loop: it resolves each program
step for the current trial, triggers stimuli through the subject port, and
consumes the port's time-ordered input queue.  All reaction-time arithmetic
uses timestamps from the port's clock domain (the capture site), never the
engine's own clock, so transport delay and clock offset cancel.

Response-window rules:
  * the window is anchored at the latest stimulus onset (or at the moment
    GET_INPUT executes when no stimulus preceded it);
  * the boundary is closed: an event at exactly anchor+delay counts, one
    microsecond later does not;
  * events arriving before the window opens are discarded, buffered input
    notwithstanding;
  * only the first mapped event determines the response.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol

from .assets import AssetStore
from .errors import EngineError, SessionAborted
from .model import (
    Begin,
    DisplayImageFile,
    DisplayText,
    End,
    EventStep,
    GetInput,
    InputDevice,
    InputMapping,
    PlaySound,
    Script,
    SettingsGroup,
    TrialOrder,
    TrialRow,
)
from .parser import decimal_value, resolve_arg
from .timing import Microseconds, compute_rtime, gain_from_db, gate_bounds, ms_to_us


class Phase(Enum):
    TRAINING = "training"
    TEST = "test"


class Correctness(Enum):
    OK = "ok"
    ERR = "err"
    NOT_APPLICABLE = "xxx"


@dataclass(frozen=True, slots=True)
class RunPlan:
    """Which trials to run, in which order."""

    phase: Phase
    trial_ids: tuple[int, ...]
    seed: int | None = None


@dataclass(frozen=True, slots=True)
class InputEvent:
    """A timestamped device event in the capture-site clock domain."""

    device: InputDevice
    code: str
    client_ts: Microseconds


@dataclass(frozen=True, slots=True)
class TrialOutcome:
    """One resolved trial: response, correctness, reaction time."""

    trial_id: int
    resolved_columns: tuple[str, ...]
    response: str | None  # None = no response within the window
    correctness: Correctness
    rtime_ms: int  # 0 when there was no response
    stimulus_onset: Microseconds
    response_time: Microseconds | None


class SubjectPort(Protocol):
    """Stimulus and input channel to the subject (live or simulated)."""

    def begin_trial(self, trial_id: int) -> None: ...

    def now(self) -> Microseconds: ...

    def present_text(self, text: str, fmt) -> Microseconds: ...

    def present_image(self, asset_id: str) -> Microseconds: ...

    def play(self, asset_id: str, gain: float, first: int, last: int) -> Microseconds: ...

    def open_window(self, window_id: str) -> None: ...

    def next_input(self, open_ts: Microseconds, deadline: Microseconds | None) -> InputEvent | None: ...

    def wait_ms(self, ms: int) -> None: ...

    def end_session(self) -> None: ...


def build_run_plan(
    script: Script,
    group: SettingsGroup,
    phase: Phase = Phase.TEST,
    seed: int | None = None,
) -> RunPlan:
    """Plan a phase: training order verbatim, or fixed/seeded-random test order."""
    if phase is Phase.TRAINING:
        if not group.training_order:
            raise EngineError("E_NO_TRAINING", f"group {group.name} has no TRAINING_ORDER")
        return RunPlan(phase, tuple(group.training_order), seed)
    ids = script.trial_ids()
    if group.trial_order is TrialOrder.RANDOM:
        if seed is None:
            raise ValueError("a seed is required for randomized trial order")
        random.Random(seed).shuffle(ids)
    return RunPlan(phase, tuple(ids), seed)


def match_input(event: InputEvent, input_map: tuple[InputMapping, ...]) -> str | None:
    """Label mapped to the event's (device, code), or None when unmapped."""
    for mapping in input_map:
        for key in mapping.codes:
            if key.name == event.code and key.event_device is event.device:
                return mapping.label
    return None


def evaluate_correctness(response: str | None, trial: TrialRow, group: SettingsGroup) -> Correctness:
    """Judge a response against the group's CORRECT source, if any."""
    if group.correct is None:
        return Correctness.NOT_APPLICABLE
    if response is None:
        return Correctness.NOT_APPLICABLE  # rendered as the xxx sentinel
    expected = resolve_arg(group.correct, trial)
    return Correctness.OK if response == expected else Correctness.ERR


def _resolved_number(arg, trial: TrialRow):
    return decimal_value(resolve_arg(arg, trial))


def execute_trial(
    trial: TrialRow,
    events: tuple[EventStep, ...],
    group: SettingsGroup,
    io: SubjectPort,
    assets: AssetStore,
) -> TrialOutcome:
    """Run the event program once over one trial row."""
    io.begin_trial(trial.id)
    latest_onset: Microseconds | None = None
    window_anchor: Microseconds | None = None
    response: InputEvent | None = None
    response_label: str | None = None
    windows = 0

    for step in sorted(events, key=lambda s: s.label):
        command = step.command
        if isinstance(command, (Begin, End)):
            continue
        if isinstance(command, DisplayText):
            latest_onset = io.present_text(resolve_arg(command.text, trial), group.text_format)
        elif isinstance(command, DisplayImageFile):
            latest_onset = io.present_image(resolve_arg(command.source, trial))
        elif isinstance(command, PlaySound):
            asset_id = resolve_arg(command.source, trial)
            handle = assets.get(asset_id)
            gain = 1.0
            if command.volume is not None:
                gain = gain_from_db(float(_resolved_number(command.volume, trial)))
            begin_ms = _resolved_number(command.time_begin, trial) if command.time_begin is not None else 0
            end_ms = _resolved_number(command.time_end, trial) if command.time_end is not None else None
            assert handle.audio is not None
            first, last = gate_bounds(handle.audio.sample_rate, handle.audio.sample_count, begin_ms, end_ms)
            latest_onset = io.play(asset_id, gain, first, last)
        elif isinstance(command, GetInput):
            if response_label is not None:
                continue  # the trial is already closed by an earlier response
            anchor = latest_onset if latest_onset is not None else io.now()
            window_anchor = anchor
            deadline = None
            if command.delay is not None:
                deadline = anchor + ms_to_us(_resolved_number(command.delay, trial))
            windows += 1
            io.open_window(f"{trial.id}:{windows}")
            while True:
                event = io.next_input(anchor, deadline)
                if event is None:
                    break
                if event.client_ts < anchor:
                    continue
                label = match_input(event, group.input_map)
                if label is None:
                    continue
                response, response_label = event, label
                break

    correctness = evaluate_correctness(response_label, trial, group)
    rtime = 0
    if response is not None and window_anchor is not None:
        rtime = compute_rtime(window_anchor, response.client_ts)

    if group.sound_feedback is not None and correctness in (Correctness.OK, Correctness.ERR):
        asset_id = group.sound_feedback.positive if correctness is Correctness.OK else group.sound_feedback.negative
        handle = assets.get(asset_id)
        assert handle.audio is not None
        io.play(asset_id, 1.0, 0, handle.audio.sample_count)

    if group.pause_ms:
        io.wait_ms(group.pause_ms)

    onset = window_anchor if window_anchor is not None else (latest_onset or 0)
    return TrialOutcome(
        trial_id=trial.id,
        resolved_columns=trial.columns,
        response=response_label,
        correctness=correctness,
        rtime_ms=rtime,
        stimulus_onset=onset,
        response_time=response.client_ts if response is not None else None,
    )


def run_session(
    script: Script,
    group: SettingsGroup,
    plan: RunPlan,
    io: SubjectPort,
    assets: AssetStore,
    subject_code: str,
    show_instructions: bool = True,
    on_outcome: Callable[[TrialOutcome], None] | None = None,
) -> list[TrialOutcome]:
    """Execute a plan: instructions first, then each trial in plan order.

    On an engine failure mid-session the outcomes produced so far are
    preserved on the raised SessionAborted.
    """
    outcomes: list[TrialOutcome] = []
    events = script.events_in_order()
    try:
        if show_instructions and group.instruction_file:
            instructions = assets.get(group.instruction_file)
            io.present_text(instructions.text or "", group.text_format)
        for trial_id in plan.trial_ids:
            outcome = execute_trial(script.trial(trial_id), events, group, io, assets)
            outcomes.append(outcome)
            if on_outcome is not None:
                on_outcome(outcome)
    except SessionAborted:
        raise
    except EngineError as exc:
        raise SessionAborted(exc.code, exc.message, outcomes) from exc
    return outcomes
