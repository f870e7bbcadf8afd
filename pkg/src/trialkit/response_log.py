"""Tabular response files: one tab-separated row per executed trial.

The layout is controlled by the group's RESPONSE_FORMAT tokens.  Files are
UTF-8 with LF line endings and a header line of token names; rows appear in
execution order, which under a randomized plan is not trial-id order.
Cells are written verbatim (they may contain spaces); cells containing tabs
are rejected outright since the format has no quoting convention.
"""

from __future__ import annotations

import re
import unicodedata
from pathlib import Path
from typing import IO

from .errors import EngineError
from .model import Column, FieldToken, TrialRow, Var, token_name
from .scheduler import TrialOutcome

#: Rendering of a missing response and of non-applicable correctness.
NO_RESPONSE_TEXT = "xxx"

ResponseRow = list[str]


def render_row(
    outcome: TrialOutcome,
    trial: TrialRow,
    tokens: tuple[FieldToken, ...],
    subject_code: str,
) -> ResponseRow:
    """Cells for one outcome, one per response-format token."""
    cells: ResponseRow = []
    for token in tokens:
        if isinstance(token, Column):
            if token.index > len(trial.columns):
                raise EngineError("E_REF_RANGE", f"response token #{token.index} exceeds trial {trial.id}")
            cells.append(trial.columns[token.index - 1])
        elif token is Var.SUBJECT:
            cells.append(subject_code)
        elif token is Var.TRIAL:
            cells.append(str(outcome.trial_id))
        elif token is Var.RESPONSE:
            cells.append(outcome.response if outcome.response is not None else NO_RESPONSE_TEXT)
        elif token is Var.ERROR:
            cells.append(outcome.correctness.value)
        elif token is Var.RTIME:
            cells.append(str(outcome.rtime_ms))
    return cells


def _check_cells(cells: ResponseRow) -> None:
    for cell in cells:
        if "\t" in cell or "\n" in cell:
            raise EngineError("E_BAD_CELL", f"cell {cell!r} contains a tab or newline")


def header_cells(tokens: tuple[FieldToken, ...], phase_column: bool = False) -> ResponseRow:
    cells = [token_name(t) for t in tokens]
    if phase_column:
        cells.append("$PHASE")
    return cells


class ResponseLogger:
    """Appends rows as trials complete, so a crash preserves prior outcomes."""

    def __init__(self, path: str | Path, tokens: tuple[FieldToken, ...], phase_column: bool = False):
        self.path = Path(path)
        self.tokens = tokens
        self.phase_column = phase_column
        try:
            self._fp: IO[str] = open(self.path, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise EngineError("E_IO", f"cannot write {self.path}") from exc
        self._write(header_cells(tokens, phase_column))

    def _write(self, cells: ResponseRow) -> None:
        _check_cells(cells)
        self._fp.write("\t".join(cells) + "\n")
        self._fp.flush()

    def log(self, outcome: TrialOutcome, trial: TrialRow, subject_code: str, phase: str | None = None) -> None:
        cells = render_row(outcome, trial, self.tokens, subject_code)
        if self.phase_column:
            cells.append(phase or "")
        self._write(cells)

    def close(self) -> None:
        self._fp.close()

    def __enter__(self) -> "ResponseLogger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_response_file(rows: list[ResponseRow], tokens: tuple[FieldToken, ...], path: str | Path) -> None:
    """Write header plus pre-rendered rows in one shot."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fp:
            for cells in [header_cells(tokens), *rows]:
                _check_cells(cells)
                fp.write("\t".join(cells) + "\n")
    except OSError as exc:
        raise EngineError("E_IO", f"cannot write {path}") from exc


def default_output_name(subject_code: str, title: str) -> str:
    """``<subject>_<title slug>.tsv``; the CLI accepts an override."""
    ascii_title = unicodedata.normalize("NFKD", title).encode("ascii", "ignore").decode("ascii")
    slug = re.sub(r"[^a-z0-9]+", "-", ascii_title.lower()).strip("-") or "untitled"
    return f"{subject_code}_{slug}.tsv"
