"""Parser and static validator for experiment script files.

The grammar is line oriented:

    [NAME]              section header; NAME is INFORMATION, TRIAL_DATA,
                        TRIAL_EVENTS or SETTINGS_<group name>
    KEY=value           entry; interpretation depends on the section
    TRIALn=<c1> <c2>..  trial-data row, one cell per angle-bracket pair
    Xnn=VERB<arg>...    event-program step, ordered by the numeric label

Blank lines are ignored.  A trailing ``*<digits>`` mark after an entry
(outside any bracket pair) is an editorial annotation and is discarded in
the trial-data, trial-events and settings sections.  Unrecognized lines
inside a known section produce warnings; unknown section headers are errors.

Diagnostic codes form a closed set.

Errors:
    E_NO_SECTION   content before the first section header (or no sections)
    E_BAD_SECTION  unknown section header
    E_SYNTAX       malformed line or construct
    E_DUP_TRIAL    duplicate trial id (first definition wins)
    E_BAD_COMMAND  unknown event verb
    E_BAD_MODIFIER unknown <KEYWORD ...> modifier on PLAY_SOUND/GET_INPUT
    E_BAD_SETTING  malformed settings value
    E_NO_TRIALS    script defines no trial rows
    E_NO_BEGIN     event program does not start with BEGIN
    E_NO_END       event program does not end with END
    E_EVENT_ORDER  BEGIN/END appears in the interior of the program
    E_DUP_EVENT    duplicate event label
    E_REF_RANGE    #N exceeds the smallest trial column count
    E_TRAIN_REF    training order references an unknown trial id
    E_BAD_VALUE    numeric modifier resolves to a non-number or bad range
    E_BAD_CELL     trial cell contains a tab (breaks the response table)

Warnings:
    W_UNKNOWN_LINE     unrecognized line inside a known section
    W_UNKNOWN_SETTING  unknown settings key
    W_NO_SETTINGS      script defines no settings group
    W_CORRECT_LABEL    CORRECT resolves to a value outside the input labels
    W_LABEL_ORDER      event labels not ascending in file order (sorted)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

from .errors import EngineError, ParseError
from .model import (
    Arg,
    Begin,
    Column,
    ColumnRef,
    Command,
    Device,
    DisplayImageFile,
    DisplayText,
    End,
    EventStep,
    FieldToken,
    GetInput,
    InputMapping,
    KeyCode,
    Literal,
    PlaySound,
    Position,
    Script,
    SettingsGroup,
    SoundFeedback,
    TextFormat,
    TrialOrder,
    TrialRow,
    Var,
    token_name,
)


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, slots=True)
class Diagnostic:
    """One finding, tied to a 1-based source line."""

    severity: Severity
    line: int
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity.value} {self.code} {self.line} {self.message}"


@dataclass(slots=True)
class ParseResult:
    """Outcome of parse_script: the script (if any) plus diagnostics."""

    script: Script | None
    diagnostics: list[Diagnostic]

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is Severity.WARNING]

    @property
    def ok(self) -> bool:
        return self.script is not None and not self.errors


def decode_script_bytes(data: bytes) -> str:
    """Decode a script file: UTF-8, falling back to Latin-1."""
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        return data.decode("latin-1")


_CALLOUT_RE = re.compile(r"^(?:\s|\*\d+)*$")
_DECIMAL_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)$")


def decimal_value(text: str) -> Fraction:
    """Exact value of a decimal numeral; raises E_BAD_VALUE otherwise."""
    text = text.strip()
    if not _DECIMAL_RE.match(text):
        raise EngineError("E_BAD_VALUE", f"not a decimal number: {text!r}")
    return Fraction(text)


def _split_cells(value: str, line: int) -> tuple[list[str], str]:
    """Split a value into its <...> cell texts plus the text outside cells."""
    cells: list[str] = []
    outside: list[str] = []
    current: list[str] | None = None
    for ch in value:
        if ch == "<":
            if current is not None:
                raise ParseError("E_SYNTAX", "nested '<' inside a cell", line)
            current = []
        elif ch == ">":
            if current is None:
                raise ParseError("E_SYNTAX", "'>' without a matching '<'", line)
            cells.append("".join(current))
            current = None
        elif current is not None:
            current.append(ch)
        else:
            outside.append(ch)
    if current is not None:
        raise ParseError("E_SYNTAX", "unterminated '<...>' cell", line)
    return cells, "".join(outside)


def _cells_only(value: str, line: int) -> list[str]:
    """Cells of a value whose outside text may hold only editorial marks."""
    cells, outside = _split_cells(value, line)
    if not _CALLOUT_RE.match(outside):
        raise ParseError("E_SYNTAX", f"unexpected text outside cells: {outside.strip()!r}", line)
    return cells


def _strip_callout(value: str) -> str:
    """Drop a trailing editorial ``*N`` mark from a bare (cell-less) value."""
    return re.sub(r"(?:\s+\*\d+)+\s*$", "", value)


def parse_arg(text: str, line: int = 1) -> Arg:
    """Decode one argument: #N column reference or literal text."""
    text = text.strip()
    if re.fullmatch(r"#\d+", text):
        index = int(text[1:])
        if index < 1:
            raise ParseError("E_SYNTAX", "column references are 1-based", line)
        return ColumnRef(index)
    return Literal(text)


def render_arg(arg: Arg) -> str:
    if isinstance(arg, ColumnRef):
        return f"#{arg.index}"
    return arg.text


# --- trial data ---------------------------------------------------------

_TRIAL_RE = re.compile(r"^TRIAL(\S*?)=(.*)$")


def parse_trial_line(line_text: str, line: int = 1) -> TrialRow:
    """Parse ``TRIALn=<cell> <cell> ...`` into a TrialRow."""
    m = _TRIAL_RE.match(line_text.strip())
    if not m:
        raise ParseError("E_SYNTAX", "expected TRIALn=<cell>...", line)
    id_text, rest = m.groups()
    if not id_text.isdigit():
        raise ParseError("E_SYNTAX", f"trial id must be numeric, got {id_text!r}", line)
    trial_id = int(id_text)
    if trial_id < 1:
        raise ParseError("E_SYNTAX", "trial ids start at 1", line)
    cells = _cells_only(rest, line)
    if not cells:
        raise ParseError("E_SYNTAX", "trial row has no cells", line)
    return TrialRow(trial_id, tuple(cell.strip() for cell in cells), line)


# --- event program ------------------------------------------------------

_EVENT_RE = re.compile(r"^X(\d+)=([A-Z_]+)(.*)$")
_SOUND_MODIFIERS = ("VOLUME", "TIME_BEGIN", "TIME_END")


def _modifier(cell: str, line: int) -> tuple[str, Arg]:
    parts = cell.strip().split(None, 1)
    if len(parts) != 2:
        raise ParseError("E_SYNTAX", f"modifier needs a value: <{cell.strip()}>", line)
    return parts[0], parse_arg(parts[1], line)


def parse_event_line(line_text: str, line: int = 1) -> EventStep:
    """Parse ``Xnn=COMMAND<arg>...`` into an EventStep."""
    m = _EVENT_RE.match(line_text.strip())
    if not m:
        raise ParseError("E_SYNTAX", "expected Xnn=COMMAND", line)
    label, verb, rest = int(m.group(1)), m.group(2), m.group(3)
    cells = _cells_only(rest, line)

    command: Command
    if verb in ("BEGIN", "END"):
        if cells:
            raise ParseError("E_SYNTAX", f"{verb} takes no arguments", line)
        command = Begin() if verb == "BEGIN" else End()
    elif verb in ("DISPLAY_TEXT", "DISPLAY_FILEBMP"):
        if len(cells) != 1:
            raise ParseError("E_SYNTAX", f"{verb} takes exactly one argument", line)
        arg = parse_arg(cells[0], line)
        command = DisplayText(arg) if verb == "DISPLAY_TEXT" else DisplayImageFile(arg)
    elif verb == "PLAY_SOUND":
        if not cells:
            raise ParseError("E_SYNTAX", "PLAY_SOUND needs a source", line)
        head = cells[0].strip()
        if any(head.startswith(kw + " ") for kw in _SOUND_MODIFIERS + ("DELAY",)):
            raise ParseError("E_SYNTAX", "PLAY_SOUND source missing before modifiers", line)
        mods: dict[str, Arg] = {}
        for cell in cells[1:]:
            keyword, value = _modifier(cell, line)
            if keyword not in _SOUND_MODIFIERS:
                raise ParseError("E_BAD_MODIFIER", f"unknown PLAY_SOUND modifier {keyword!r}", line)
            if keyword in mods:
                raise ParseError("E_SYNTAX", f"duplicate modifier {keyword!r}", line)
            mods[keyword] = value
        command = PlaySound(
            source=parse_arg(head, line),
            volume=mods.get("VOLUME"),
            time_begin=mods.get("TIME_BEGIN"),
            time_end=mods.get("TIME_END"),
        )
    elif verb == "GET_INPUT":
        delay: Arg | None = None
        for cell in cells:
            keyword, value = _modifier(cell, line)
            if keyword != "DELAY":
                raise ParseError("E_BAD_MODIFIER", f"unknown GET_INPUT modifier {keyword!r}", line)
            if delay is not None:
                raise ParseError("E_SYNTAX", "duplicate DELAY modifier", line)
            delay = value
        command = GetInput(delay)
    else:
        raise ParseError("E_BAD_COMMAND", f"unknown command {verb!r}", line)
    return EventStep(label, command, line)


# --- settings -----------------------------------------------------------

_KEY_RE = re.compile(r"^([A-Z_][A-Z0-9_]*)=(.*)$")
_VAR_NAMES = {v.value.lstrip("$"): v for v in Var}


def _parse_color(text: str, line: int) -> tuple[int, int, int]:
    m = re.fullmatch(r"0x([0-9A-Fa-f]{6})", text.strip())
    if not m:
        raise ParseError("E_BAD_SETTING", f"expected 0xRRGGBB color, got {text!r}", line)
    value = int(m.group(1), 16)
    return (value >> 16) & 0xFF, (value >> 8) & 0xFF, value & 0xFF


def _parse_text_format(cells: list[str], base: TextFormat, line: int) -> TextFormat:
    fmt = base
    for cell in cells:
        parts = cell.strip().split(None, 1)
        if len(parts) != 2:
            raise ParseError("E_BAD_SETTING", f"bad TEXT_FORMAT item <{cell.strip()}>", line)
        item, value = parts
        if item == "FONT":
            fmt = replace(fmt, font=value.strip())
        elif item == "SIZE":
            if not value.strip().isdigit() or int(value) < 1:
                raise ParseError("E_BAD_SETTING", f"SIZE must be a positive integer: {value!r}", line)
            fmt = replace(fmt, size=int(value))
        elif item == "BKCOLOR":
            fmt = replace(fmt, bkcolor=_parse_color(value, line))
        elif item == "TXTCOLOR":
            fmt = replace(fmt, txtcolor=_parse_color(value, line))
        elif item == "POSITION":
            flags = set()
            for name in value.strip().split("|"):
                try:
                    flags.add(Position(name.strip()))
                except ValueError:
                    raise ParseError("E_BAD_SETTING", f"unknown POSITION flag {name!r}", line) from None
            fmt = replace(fmt, position=frozenset(flags))
        else:
            raise ParseError("E_BAD_SETTING", f"unknown TEXT_FORMAT item {item!r}", line)
    return fmt


def _parse_input_map(cells: list[str], line: int) -> tuple[InputMapping, ...]:
    mappings: list[InputMapping] = []
    seen_labels: set[str] = set()
    seen_codes: set[KeyCode] = set()
    for cell in cells:
        parts = cell.strip().split()
        if len(parts) < 2:
            raise ParseError("E_BAD_SETTING", f"INPUT mapping needs a label and keys: <{cell.strip()}>", line)
        label, *key_names = parts
        if label in seen_labels:
            raise ParseError("E_BAD_SETTING", f"duplicate response label {label!r}", line)
        seen_labels.add(label)
        codes = []
        for name in key_names:
            prefix, _, suffix = name.partition("_")
            try:
                device = Device(prefix)
            except ValueError:
                raise ParseError("E_BAD_SETTING", f"unknown key-code prefix in {name!r}", line) from None
            if not suffix:
                raise ParseError("E_BAD_SETTING", f"empty key code in {name!r}", line)
            key = KeyCode(device, suffix)
            if key in seen_codes:
                raise ParseError("E_BAD_SETTING", f"key {name} mapped to two labels", line)
            seen_codes.add(key)
            codes.append(key)
        mappings.append(InputMapping(label, tuple(codes)))
    return tuple(mappings)


def _parse_field_tokens(cells: list[str], line: int) -> tuple[FieldToken, ...]:
    tokens: list[FieldToken] = []
    for cell in cells:
        text = cell.strip()
        if text.startswith("$"):
            # A doubled $$ is an escaping artifact; both spellings are accepted.
            name = text.lstrip("$")
            if name not in _VAR_NAMES:
                raise ParseError("E_BAD_SETTING", f"unknown variable token {text!r}", line)
            tokens.append(_VAR_NAMES[name])
        elif re.fullmatch(r"#\d+", text):
            index = int(text[1:])
            if index < 1:
                raise ParseError("E_BAD_SETTING", "column tokens are 1-based", line)
            tokens.append(Column(index))
        else:
            raise ParseError("E_BAD_SETTING", f"unknown response token {text!r}", line)
    return tuple(tokens)


def parse_settings_entry(key: str, value: str, group: SettingsGroup, line: int = 1) -> SettingsGroup:
    """Apply one ``KEY=value`` settings entry to a group.

    Unknown keys raise a ParseError carrying the W_UNKNOWN_SETTING code;
    parse_script downgrades those to warnings.
    """
    group.entry_lines[key] = line
    if key == "INSTRUCTION_FORMAT":
        cells = _cells_only(value, line)
        if len(cells) != 1 or not cells[0].strip():
            raise ParseError("E_BAD_SETTING", "INSTRUCTION_FORMAT takes one file path", line)
        return replace(group, instruction_file=cells[0].strip())
    if key == "TRAINING_ORDER":
        cells = _cells_only(value, line)
        if len(cells) != 1:
            raise ParseError("E_BAD_SETTING", "TRAINING_ORDER takes one id list", line)
        ids = []
        for part in cells[0].split():
            if not part.isdigit() or int(part) < 1:
                raise ParseError("E_BAD_SETTING", f"bad trial id {part!r} in TRAINING_ORDER", line)
            ids.append(int(part))
        return replace(group, training_order=tuple(ids))
    if key == "TRIAL_ORDER":
        cells = _cells_only(value, line)
        if len(cells) != 1:
            raise ParseError("E_BAD_SETTING", "TRIAL_ORDER takes one value", line)
        try:
            order = TrialOrder(cells[0].strip())
        except ValueError:
            raise ParseError("E_BAD_SETTING", f"TRIAL_ORDER must be FIXED or RANDOM, got {cells[0]!r}", line) from None
        return replace(group, trial_order=order)
    if key == "TEXT_FORMAT":
        cells = _cells_only(value, line)
        return replace(group, text_format=_parse_text_format(cells, group.text_format, line))
    if key == "INPUT":
        cells = _cells_only(value, line)
        return replace(group, input_map=_parse_input_map(cells, line))
    if key == "CORRECT":
        cells = _cells_only(value, line)
        if len(cells) != 1:
            raise ParseError("E_BAD_SETTING", "CORRECT takes one value", line)
        return replace(group, correct=parse_arg(cells[0], line))
    if key == "PAUSE":
        text = _strip_callout(value).strip()
        if not text.isdigit():
            raise ParseError("E_BAD_SETTING", f"PAUSE must be a non-negative integer, got {text!r}", line)
        return replace(group, pause_ms=int(text))
    if key == "RESPONSE_FORMAT":
        cells = _cells_only(value, line)
        return replace(group, response_format=_parse_field_tokens(cells, line))
    if key == "SOUND_FEEDBACK":
        cells = _cells_only(value, line)
        paths: dict[str, str] = {}
        for cell in cells:
            parts = cell.strip().split(None, 1)
            if len(parts) != 2 or parts[0] not in ("POSITIVE", "NEGATIVE"):
                raise ParseError("E_BAD_SETTING", f"bad SOUND_FEEDBACK item <{cell.strip()}>", line)
            paths[parts[0]] = parts[1].strip()
        if set(paths) != {"POSITIVE", "NEGATIVE"}:
            raise ParseError("E_BAD_SETTING", "SOUND_FEEDBACK needs POSITIVE and NEGATIVE", line)
        return replace(group, sound_feedback=SoundFeedback(paths["POSITIVE"], paths["NEGATIVE"]))
    raise ParseError("W_UNKNOWN_SETTING", f"unknown settings key {key!r}", line)


# --- whole scripts ------------------------------------------------------

_SECTION_RE = re.compile(r"^\[([A-Za-z0-9_]+)\]$")


def _source_lines(text: str) -> list[str]:
    # Line endings are LF or CRLF only; other Unicode breaks are cell text.
    return [line[:-1] if line.endswith("\r") else line for line in text.split("\n")]


def parse_script(text: str) -> ParseResult:
    """Parse script source into a Script plus diagnostics.

    Parsing is line oriented and error tolerant: a bad line yields a
    diagnostic and parsing continues, so one pass reports every problem.
    """
    diags: list[Diagnostic] = []
    info: dict[str, str] = {}
    trials: list[TrialRow] = []
    trial_ids: set[int] = set()
    events: list[EventStep] = []
    groups: list[SettingsGroup] = []
    section: str | None = None
    group: SettingsGroup | None = None
    saw_section = False
    flagged_preamble = False

    def fail(exc: ParseError) -> None:
        severity = Severity.WARNING if exc.code.startswith("W_") else Severity.ERROR
        diags.append(Diagnostic(severity, exc.line or 0, exc.code, exc.message))

    def warn(line: int, code: str, message: str) -> None:
        diags.append(Diagnostic(Severity.WARNING, line, code, message))

    def close_group() -> None:
        nonlocal group
        if group is not None:
            groups.append(group)
            group = None

    for lineno, raw in enumerate(_source_lines(text), 1):
        line = raw.strip()
        if not line:
            continue
        header = _SECTION_RE.match(line)
        if header:
            saw_section = True
            close_group()
            name = header.group(1)
            if name in ("INFORMATION", "TRIAL_DATA", "TRIAL_EVENTS"):
                section = name
            elif name.startswith("SETTINGS_") and len(name) > len("SETTINGS_"):
                section = "SETTINGS"
                group = SettingsGroup(name=name[len("SETTINGS_"):], line=lineno)
            else:
                diags.append(Diagnostic(Severity.ERROR, lineno, "E_BAD_SECTION", f"unknown section [{name}]"))
                section = None
            continue
        if section is None:
            if not saw_section and not flagged_preamble:
                diags.append(
                    Diagnostic(Severity.ERROR, lineno, "E_NO_SECTION", "content before the first section header")
                )
                flagged_preamble = True
            continue
        try:
            if section == "INFORMATION":
                entry = _KEY_RE.match(line)
                if not entry:
                    warn(lineno, "W_UNKNOWN_LINE", f"unrecognized line: {line!r}")
                else:
                    info[entry.group(1)] = entry.group(2).strip()
            elif section == "TRIAL_DATA":
                if not line.startswith("TRIAL") or "=" not in line:
                    warn(lineno, "W_UNKNOWN_LINE", f"unrecognized line: {line!r}")
                    continue
                row = parse_trial_line(line, lineno)
                if row.id in trial_ids:
                    raise ParseError("E_DUP_TRIAL", f"trial {row.id} already defined", lineno)
                trial_ids.add(row.id)
                trials.append(row)
            elif section == "TRIAL_EVENTS":
                if not line.startswith("X") or "=" not in line:
                    warn(lineno, "W_UNKNOWN_LINE", f"unrecognized line: {line!r}")
                    continue
                events.append(parse_event_line(line, lineno))
            elif section == "SETTINGS":
                entry = _KEY_RE.match(line)
                if not entry:
                    warn(lineno, "W_UNKNOWN_LINE", f"unrecognized line: {line!r}")
                    continue
                assert group is not None
                group = parse_settings_entry(entry.group(1), entry.group(2), group, lineno)
        except ParseError as exc:
            fail(exc)

    close_group()
    if not saw_section:
        diags.append(Diagnostic(Severity.ERROR, 1, "E_NO_SECTION", "no section headers found"))
        return ParseResult(None, diags)
    script = Script(info, tuple(trials), tuple(events), tuple(groups))
    return ParseResult(script, diags)


def resolve_arg(arg: Arg, trial: TrialRow) -> str:
    """Value of an argument for one trial; #N yields the trial's Nth cell."""
    if isinstance(arg, Literal):
        return arg.text
    if arg.index > len(trial.columns):
        raise EngineError(
            "E_REF_RANGE",
            f"#{arg.index} out of range for trial {trial.id} ({len(trial.columns)} columns)",
        )
    return trial.columns[arg.index - 1]


# --- validation ---------------------------------------------------------

def _column_refs(command: Command) -> list[ColumnRef]:
    refs = []
    for attr in ("text", "source", "volume", "time_begin", "time_end", "delay"):
        value = getattr(command, attr, None)
        if isinstance(value, ColumnRef):
            refs.append(value)
    return refs


def _check_numeric(arg: Arg, trials: tuple[TrialRow, ...], name: str, signed: bool, line: int) -> list[Diagnostic]:
    diags = []
    for trial in trials:
        try:
            value = decimal_value(resolve_arg(arg, trial))
        except EngineError as exc:
            if exc.code == "E_REF_RANGE":
                continue  # reported separately
            diags.append(
                Diagnostic(
                    Severity.ERROR, line, "E_BAD_VALUE",
                    f"{name} does not resolve to a number for trial {trial.id}",
                )
            )
            continue
        if not signed and value < 0:
            diags.append(
                Diagnostic(
                    Severity.ERROR, line, "E_BAD_VALUE",
                    f"{name} must be non-negative, got {value} for trial {trial.id}",
                )
            )
    return diags


def validate_script(script: Script) -> list[Diagnostic]:
    """Static checks beyond the grammar; returns diagnostics, never raises."""
    diags: list[Diagnostic] = []

    def error(line: int | None, code: str, message: str) -> None:
        diags.append(Diagnostic(Severity.ERROR, line or 1, code, message))

    def warn(line: int | None, code: str, message: str) -> None:
        diags.append(Diagnostic(Severity.WARNING, line or 1, code, message))

    if not script.trials:
        error(1, "E_NO_TRIALS", "script defines no trial rows")
    for trial in script.trials:
        for i, cell in enumerate(trial.columns, 1):
            if "\t" in cell or "\n" in cell:
                error(trial.line, "E_BAD_CELL", f"trial {trial.id} cell {i} contains a tab or newline")

    labels = [step.label for step in script.events]
    seen: set[int] = set()
    for step in script.events:
        if step.label in seen:
            error(step.line, "E_DUP_EVENT", f"duplicate event label X{step.label}")
        seen.add(step.label)
    if labels != sorted(labels):
        warn(script.events[0].line if script.events else 1, "W_LABEL_ORDER",
             "event labels are not ascending in file order; execution sorts by label")

    ordered = script.events_in_order()
    if not ordered or not isinstance(ordered[0].command, Begin):
        error(ordered[0].line if ordered else 1, "E_NO_BEGIN", "event program must start with BEGIN")
    if not ordered or not isinstance(ordered[-1].command, End):
        error(ordered[-1].line if ordered else 1, "E_NO_END", "event program must end with END")
    for step in ordered[1:-1]:
        if isinstance(step.command, (Begin, End)):
            error(step.line, "E_EVENT_ORDER", "BEGIN/END allowed only at the program boundaries")

    arity = script.min_arity()
    for step in ordered:
        for ref in _column_refs(step.command):
            if script.trials and ref.index > arity:
                error(step.line, "E_REF_RANGE", f"#{ref.index} exceeds the smallest trial arity ({arity})")
        cmd = step.command
        if isinstance(cmd, PlaySound):
            if cmd.volume is not None:
                diags.extend(_check_numeric(cmd.volume, script.trials, "VOLUME", True, step.line or 1))
            if cmd.time_begin is not None:
                diags.extend(_check_numeric(cmd.time_begin, script.trials, "TIME_BEGIN", False, step.line or 1))
            if cmd.time_end is not None:
                diags.extend(_check_numeric(cmd.time_end, script.trials, "TIME_END", False, step.line or 1))
        elif isinstance(cmd, GetInput) and cmd.delay is not None:
            diags.extend(_check_numeric(cmd.delay, script.trials, "DELAY", False, step.line or 1))

    if not script.groups:
        warn(1, "W_NO_SETTINGS", "script defines no settings group; a default will be used")
    ids = set(script.trial_ids())
    for group in script.groups:
        g_line = group.line
        if group.training_order:
            t_line = group.entry_lines.get("TRAINING_ORDER", g_line)
            for tid in group.training_order:
                if tid not in ids:
                    error(t_line, "E_TRAIN_REF", f"training order references unknown trial {tid}")
        if group.correct is not None:
            c_line = group.entry_lines.get("CORRECT", g_line)
            if isinstance(group.correct, ColumnRef) and script.trials and group.correct.index > arity:
                error(c_line, "E_REF_RANGE", f"CORRECT #{group.correct.index} exceeds the smallest trial arity")
            elif group.input_map:
                wanted = set(group.labels())
                for trial in script.trials:
                    try:
                        value = resolve_arg(group.correct, trial)
                    except EngineError:
                        continue
                    if value not in wanted:
                        warn(c_line, "W_CORRECT_LABEL",
                             f"CORRECT value {value!r} for trial {trial.id} is not an input label")
        for token in group.response_format:
            if isinstance(token, Column) and script.trials and token.index > arity:
                r_line = group.entry_lines.get("RESPONSE_FORMAT", g_line)
                error(r_line, "E_REF_RANGE", f"response token #{token.index} exceeds the smallest trial arity")
    return diags


# --- canonical rendering ------------------------------------------------

def _render_command(command: Command) -> str:
    if isinstance(command, Begin):
        return "BEGIN"
    if isinstance(command, End):
        return "END"
    if isinstance(command, DisplayText):
        return f"DISPLAY_TEXT<{render_arg(command.text)}>"
    if isinstance(command, DisplayImageFile):
        return f"DISPLAY_FILEBMP<{render_arg(command.source)}>"
    if isinstance(command, PlaySound):
        parts = [f"PLAY_SOUND<{render_arg(command.source)}>"]
        for keyword, arg in (
            ("VOLUME", command.volume),
            ("TIME_BEGIN", command.time_begin),
            ("TIME_END", command.time_end),
        ):
            if arg is not None:
                parts.append(f"<{keyword} {render_arg(arg)}>")
        return "".join(parts)
    if isinstance(command, GetInput):
        if command.delay is None:
            return "GET_INPUT"
        return f"GET_INPUT<DELAY {render_arg(command.delay)}>"
    raise TypeError(command)


def _render_color(color: tuple[int, int, int]) -> str:
    r, g, b = color
    return f"0x{r:02X}{g:02X}{b:02X}"


def _render_group(group: SettingsGroup) -> list[str]:
    lines = [f"[SETTINGS_{group.name}]"]
    if group.instruction_file:
        lines.append(f"INSTRUCTION_FORMAT=<{group.instruction_file}>")
    if group.training_order is not None:
        lines.append(f"TRAINING_ORDER=<{' '.join(str(i) for i in group.training_order)}>")
    lines.append(f"TRIAL_ORDER=<{group.trial_order.value}>")
    fmt = group.text_format
    position = "|".join(p.value for p in Position if p in fmt.position)
    lines.append(
        f"TEXT_FORMAT=<FONT {fmt.font}><SIZE {fmt.size}>"
        f"<BKCOLOR {_render_color(fmt.bkcolor)}><TXTCOLOR {_render_color(fmt.txtcolor)}>"
        f"<POSITION {position}>"
    )
    if group.input_map:
        cells = "".join(f"<{m.label} {' '.join(k.name for k in m.codes)}>" for m in group.input_map)
        lines.append(f"INPUT={cells}")
    if group.correct is not None:
        lines.append(f"CORRECT=<{render_arg(group.correct)}>")
    lines.append(f"PAUSE={group.pause_ms}")
    lines.append("RESPONSE_FORMAT=" + "".join(f"<{token_name(t)}>" for t in group.response_format))
    if group.sound_feedback is not None:
        lines.append(
            f"SOUND_FEEDBACK=<POSITIVE {group.sound_feedback.positive}>"
            f"<NEGATIVE {group.sound_feedback.negative}>"
        )
    return lines


def render_script(script: Script) -> str:
    """Canonical text of a Script; re-parsing yields an equal Script."""
    lines: list[str] = []
    if script.info:
        lines.append("[INFORMATION]")
        lines.extend(f"{key}={value}" for key, value in script.info.items())
        lines.append("")
    lines.append("[TRIAL_DATA]")
    for trial in script.trials:
        lines.append(f"TRIAL{trial.id}=" + " ".join(f"<{cell}>" for cell in trial.columns))
    lines.append("")
    lines.append("[TRIAL_EVENTS]")
    lines.extend(f"X{step.label}={_render_command(step.command)}" for step in script.events)
    for group in script.groups:
        lines.append("")
        lines.extend(_render_group(group))
    return "\n".join(lines) + "\n"
