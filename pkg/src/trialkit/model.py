"""Domain types for parsed experiment scripts.

A script has four kinds of sections: an information block, trial data rows,
an event program, and one or more settings groups.  Every construct of the
script language is represented by exactly one type in this module.  All
types are immutable after construction and safe to share across threads.

Source line numbers are carried for diagnostics but excluded from equality,
so a parsed script compares equal to its re-parsed canonical rendering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Device(Enum):
    """Key-code device class, from the code prefix."""

    CHARACTER_KEY = "CK"
    VIRTUAL_KEY = "VK"
    BUTTON_BOX = "BK"


class InputDevice(Enum):
    """Physical device class of a captured input event."""

    KEYBOARD = "keyboard"
    BUTTON_BOX = "button_box"


@dataclass(frozen=True, slots=True)
class KeyCode:
    """One authorized key, e.g. CK_1, VK_NUMPAD1 or BK_01."""

    device: Device
    code: str

    @property
    def name(self) -> str:
        return f"{self.device.value}_{self.code}"

    @property
    def event_device(self) -> InputDevice:
        if self.device is Device.BUTTON_BOX:
            return InputDevice.BUTTON_BOX
        return InputDevice.KEYBOARD


@dataclass(frozen=True, slots=True)
class Literal:
    """Argument used verbatim."""

    text: str


@dataclass(frozen=True, slots=True)
class ColumnRef:
    """Argument resolved from a trial-data column, written #N (1-based)."""

    index: int


Arg = Literal | ColumnRef


@dataclass(frozen=True, slots=True)
class TrialRow:
    """One data row: TRIALn= followed by angle-bracketed cells."""

    id: int
    columns: tuple[str, ...]
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class Begin:
    pass


@dataclass(frozen=True, slots=True)
class End:
    pass


@dataclass(frozen=True, slots=True)
class DisplayText:
    text: Arg


@dataclass(frozen=True, slots=True)
class DisplayImageFile:
    source: Arg


@dataclass(frozen=True, slots=True)
class PlaySound:
    source: Arg
    volume: Arg | None = None      # dB relative to the recording, signed
    time_begin: Arg | None = None  # ms into the source file
    time_end: Arg | None = None    # ms into the source file


@dataclass(frozen=True, slots=True)
class GetInput:
    delay: Arg | None = None  # response window in ms; None = unbounded


Command = Begin | End | DisplayText | DisplayImageFile | PlaySound | GetInput


@dataclass(frozen=True, slots=True)
class EventStep:
    """One labeled program step, Xnn=COMMAND.  Execution order is by label."""

    label: int
    command: Command
    line: int | None = field(default=None, compare=False)


class TrialOrder(Enum):
    FIXED = "FIXED"
    RANDOM = "RANDOM"


class Position(Enum):
    """Text placement flags; HCenter/VCenter plus reserved edge flags."""

    HCENTER = "HCenter"
    VCENTER = "VCenter"
    LEFT = "Left"
    RIGHT = "Right"
    TOP = "Top"
    BOTTOM = "Bottom"


@dataclass(frozen=True, slots=True)
class TextFormat:
    """On-screen text style; colors are RGB triples in [0, 255]."""

    font: str = "Arial"
    size: int = 24
    bkcolor: tuple[int, int, int] = (0, 0, 0)
    txtcolor: tuple[int, int, int] = (255, 255, 255)
    position: frozenset[Position] = frozenset({Position.HCENTER, Position.VCENTER})


@dataclass(frozen=True, slots=True)
class InputMapping:
    """Response label and the key codes that produce it."""

    label: str
    codes: tuple[KeyCode, ...]


class Var(Enum):
    """Response-file variable tokens."""

    SUBJECT = "$SUBJECT"
    TRIAL = "$TRIAL"
    RESPONSE = "$RESPONSE"
    ERROR = "$ERROR"
    RTIME = "$RTIME"


@dataclass(frozen=True, slots=True)
class Column:
    """Response-file column token, written #N (1-based)."""

    index: int


FieldToken = Var | Column

DEFAULT_RESPONSE_FORMAT: tuple[FieldToken, ...] = (
    Var.SUBJECT,
    Var.TRIAL,
    Var.RESPONSE,
    Var.ERROR,
    Var.RTIME,
)


def token_name(token: FieldToken) -> str:
    """Canonical header name of a response-format token."""
    if isinstance(token, Column):
        return f"#{token.index}"
    return token.value


@dataclass(frozen=True, slots=True)
class SoundFeedback:
    """Sounds played after a judged response."""

    positive: str
    negative: str


@dataclass(frozen=True, slots=True)
class SettingsGroup:
    """Run configuration; a script may define several, selected by name."""

    name: str
    instruction_file: str | None = None
    training_order: tuple[int, ...] | None = None
    trial_order: TrialOrder = TrialOrder.FIXED
    text_format: TextFormat = TextFormat()
    input_map: tuple[InputMapping, ...] = ()
    correct: Arg | None = None
    pause_ms: int = 0
    response_format: tuple[FieldToken, ...] = DEFAULT_RESPONSE_FORMAT
    sound_feedback: SoundFeedback | None = None
    line: int | None = field(default=None, compare=False)
    entry_lines: dict[str, int] = field(default_factory=dict, compare=False)

    def labels(self) -> list[str]:
        return [m.label for m in self.input_map]


def default_group() -> SettingsGroup:
    """Fallback configuration for scripts that define no settings section."""
    return SettingsGroup(name="DEFAULT")


@dataclass(frozen=True, slots=True)
class Script:
    """A parsed experiment script."""

    info: dict[str, str]
    trials: tuple[TrialRow, ...]
    events: tuple[EventStep, ...]
    groups: tuple[SettingsGroup, ...]

    def trial(self, trial_id: int) -> TrialRow:
        for row in self.trials:
            if row.id == trial_id:
                return row
        raise KeyError(trial_id)

    def trial_ids(self) -> list[int]:
        return [row.id for row in self.trials]

    def events_in_order(self) -> tuple[EventStep, ...]:
        return tuple(sorted(self.events, key=lambda step: step.label))

    def min_arity(self) -> int:
        """Smallest column count over all trials (0 when there are none)."""
        if not self.trials:
            return 0
        return min(len(row.columns) for row in self.trials)

    def group(self, name: str | None = None) -> SettingsGroup:
        """Group by name, or the first one; a default group if none exist."""
        if name is None:
            return self.groups[0] if self.groups else default_group()
        for grp in self.groups:
            if grp.name == name:
                return grp
        raise KeyError(name)

    @property
    def title(self) -> str:
        return self.info.get("TITLE", "untitled")
