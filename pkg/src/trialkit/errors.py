"""Engine errors carrying stable machine-readable codes."""

from __future__ import annotations


class EngineError(Exception):
    """Failure identified by a stable code (E_ASSET_MISSING, E_PROTO, ...)."""

    def __init__(self, code: str, message: str, line: int | None = None):
        text = f"{code}: {message}" if line is None else f"{code} (line {line}): {message}"
        super().__init__(text)
        self.code = code
        self.message = message
        self.line = line


class ParseError(EngineError):
    """Raised by line-level parsers; parse_script turns these into diagnostics."""


class SessionAborted(EngineError):
    """Session ended early; carries the outcomes completed before the failure."""

    def __init__(self, code: str, message: str, outcomes: list):
        super().__init__(code, message)
        self.outcomes = outcomes
