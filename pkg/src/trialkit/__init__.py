"""Script-driven perception-test engine.

Parses section-based experiment scripts, executes trial event programs with
latency-robust reaction-time measurement, and writes tabular response
files.  Sessions run headless against a simulated subject or serve a live
presentation client over a local wire protocol.
"""

from .errors import EngineError, ParseError, SessionAborted
from .model import Script, SettingsGroup, TrialRow, default_group
from .parser import (
    Diagnostic,
    ParseResult,
    Severity,
    decode_script_bytes,
    parse_script,
    render_script,
    resolve_arg,
    validate_script,
)
from .scheduler import (
    Correctness,
    InputEvent,
    Phase,
    RunPlan,
    TrialOutcome,
    build_run_plan,
    evaluate_correctness,
    execute_trial,
    match_input,
    run_session,
)
from .timing import LatencyProfile, MonotonicClock, VirtualClock, compute_rtime, gain_from_db, gate_bounds

__version__ = "0.1.0"

__all__ = [
    "Correctness",
    "Diagnostic",
    "EngineError",
    "InputEvent",
    "LatencyProfile",
    "MonotonicClock",
    "ParseError",
    "ParseResult",
    "Phase",
    "RunPlan",
    "Script",
    "SessionAborted",
    "SettingsGroup",
    "Severity",
    "TrialOutcome",
    "TrialRow",
    "VirtualClock",
    "__version__",
    "build_run_plan",
    "compute_rtime",
    "decode_script_bytes",
    "default_group",
    "evaluate_correctness",
    "execute_trial",
    "gain_from_db",
    "gate_bounds",
    "match_input",
    "parse_script",
    "render_script",
    "resolve_arg",
    "run_session",
    "validate_script",
]
