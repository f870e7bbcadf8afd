"""Operator entry point: validate scripts, run headless, serve live sessions.

Exit codes:
    0  success (validate: no errors; run/serve: response file written)
    1  script has validation errors
    2  script file unreadable
    3  schedule or asset problem (run), other engine failure
    4  serve endpoint already in use
    5  client lost or never connected (serve)

Diagnostics go to standard error, one per line: ``severity code line message``.
All randomness flows from --seed; when omitted a seed is generated and
printed so the run can be reproduced.
"""

from __future__ import annotations

import argparse
import errno
import secrets
import sys
from pathlib import Path

from .assets import AssetStore, preload_all
from .errors import EngineError, SessionAborted
from .model import Script, SettingsGroup, default_group
from .parser import Diagnostic, decode_script_bytes, parse_script, validate_script
from .response_log import ResponseLogger, default_output_name
from .scheduler import Phase, RunPlan, build_run_plan, run_session
from .server import serve_session
from .simulate import SimulatedSubject, check_schedule, load_schedule_file
from .timing import LatencyProfile, measure_resolution


def _print_diagnostics(diags: list[Diagnostic]) -> None:
    for diag in diags:
        print(diag, file=sys.stderr)


def _load_script(path: str) -> tuple[Script | None, bool]:
    """Parse and validate; prints diagnostics.  Returns (script, had_errors)."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        print(f"error E_IO 0 cannot read {path}: {exc.strerror}", file=sys.stderr)
        return None, False
    result = parse_script(decode_script_bytes(data))
    diags = list(result.diagnostics)
    if result.script is not None:
        diags += validate_script(result.script)
    _print_diagnostics(diags)
    had_errors = any(d.code.startswith("E_") for d in diags)
    return result.script, had_errors


def _pick_group(script: Script, name: str | None) -> SettingsGroup:
    if not script.groups:
        print("note: script has no settings group; using defaults", file=sys.stderr)
        return default_group()
    try:
        return script.group(name)
    except KeyError:
        raise EngineError("E_BAD_SETTING", f"no settings group named {name!r}") from None


def _seed_value(arg: int | None) -> int:
    seed = arg if arg is not None else secrets.randbits(63)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _build_plans(script: Script, group: SettingsGroup, seed: int, training: bool) -> list[RunPlan]:
    plans = []
    if training:
        plans.append(build_run_plan(script, group, Phase.TRAINING, seed))
    plans.append(build_run_plan(script, group, Phase.TEST, seed))
    return plans


def cmd_validate(args: argparse.Namespace) -> int:
    script, had_errors = _load_script(args.script)
    if script is None and not had_errors:
        return 2
    return 1 if had_errors or script is None else 0


def cmd_run(args: argparse.Namespace) -> int:
    script, had_errors = _load_script(args.script)
    if script is None and not had_errors:
        return 2
    if script is None or had_errors:
        return 1
    try:
        group = _pick_group(script, args.group)
        seed = _seed_value(args.seed)
        schedule = load_schedule_file(args.schedule)
        check_schedule(schedule, script)
        assets = AssetStore(args.assets or Path(args.script).parent)
        preload_all(assets, script, group)
        plans = _build_plans(script, group, seed, args.training)
        out_path = Path(args.out) if args.out else Path(default_output_name(args.subject, script.title))
        latency = LatencyProfile(
            play_latency_ms=args.play_latency,
            display_latency_ms=args.display_latency,
        )
        io = SimulatedSubject(schedule, latency)
        with ResponseLogger(out_path, group.response_format, phase_column=args.log_phase) as logger:
            for index, plan in enumerate(plans):
                run_session(
                    script,
                    group,
                    plan,
                    io,
                    assets,
                    args.subject,
                    show_instructions=(index == 0),
                    on_outcome=lambda o, p=plan: logger.log(
                        o, script.trial(o.trial_id), args.subject, p.phase.value
                    ),
                )
        print(out_path)
        return 0
    except SessionAborted as exc:
        print(f"error {exc.code} 0 {exc.message} ({len(exc.outcomes)} outcomes kept)", file=sys.stderr)
        return 3
    except EngineError as exc:
        print(f"error {exc.code} 0 {exc.message}", file=sys.stderr)
        return 3


def _parse_endpoint(listen: str) -> tuple[str, int]:
    text = listen.removeprefix("ws://")
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise EngineError("E_PROTO", f"bad endpoint {listen!r}; expected ws://host:port")
    return host, int(port)


def cmd_serve(args: argparse.Namespace) -> int:
    script, had_errors = _load_script(args.script)
    if script is None and not had_errors:
        return 2
    if script is None or had_errors:
        return 1
    try:
        group = _pick_group(script, args.group)
        seed = _seed_value(args.seed)
        assets = AssetStore(args.assets or Path(args.script).parent)
        preload_all(assets, script, group)
        plans = _build_plans(script, group, seed, args.training)
        out_path = Path(args.out) if args.out else Path(default_output_name(args.subject, script.title))
        host, port = _parse_endpoint(args.listen)
        print(f"clock resolution: {measure_resolution()} us", file=sys.stderr)
        print(f"listening on ws://{host}:{port}", file=sys.stderr)
        with ResponseLogger(out_path, group.response_format, phase_column=args.log_phase) as logger:
            outcomes, ready = serve_session(
                script,
                group,
                plans,
                assets,
                args.subject,
                host,
                port,
                accept_timeout_s=args.accept_timeout,
                on_outcome=lambda o, p: logger.log(o, script.trial(o.trial_id), args.subject, p.phase.value),
            )
        if ready.audio_latency_ms is not None:
            print(f"client audio output latency: {ready.audio_latency_ms} ms", file=sys.stderr)
        else:
            print("client audio output latency: unreported", file=sys.stderr)
        print(f"session complete: {len(outcomes)} trials", file=sys.stderr)
        print(out_path)
        return 0
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            print(f"error E_BUSY 0 endpoint in use: {args.listen}", file=sys.stderr)
            return 4
        raise
    except SessionAborted as exc:
        print(f"error {exc.code} 0 {exc.message} ({len(exc.outcomes)} outcomes kept)", file=sys.stderr)
        return 5 if exc.code == "E_CLIENT_LOST" else 3
    except EngineError as exc:
        print(f"error {exc.code} 0 {exc.message}", file=sys.stderr)
        return 5 if exc.code == "E_CLIENT_LOST" else 3


def _nonempty(text: str) -> str:
    if not text:
        raise argparse.ArgumentTypeError("must not be empty")
    return text


def _add_common_run_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--script", required=True, help="script file to run")
    sub.add_argument("--group", help="settings group name (default: first group)")
    sub.add_argument("--subject", required=True, type=_nonempty, help="subject code for the response file")
    sub.add_argument("--seed", type=int, help="randomization seed (generated and printed if omitted)")
    sub.add_argument("--out", help="response file path (default: <subject>_<title>.tsv)")
    sub.add_argument("--assets", help="asset directory (default: the script's directory)")
    sub.add_argument("--training", action="store_true", help="run the training phase before the test phase")
    sub.add_argument("--log-phase", action="store_true", help="append a $PHASE column to the response file")


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trialkit", description="Script-driven perception-test engine")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="parse and statically check a script")
    validate.add_argument("--script", required=True, help="script file to check")
    validate.set_defaults(func=cmd_validate)

    run = commands.add_parser("run", help="run headless against a simulated subject")
    _add_common_run_args(run)
    run.add_argument("--schedule", required=True, help="simulated-subject schedule file")
    run.add_argument("--play-latency", type=float, default=0.0, help="simulated audio latency in ms")
    run.add_argument("--display-latency", type=float, default=0.0, help="simulated display latency in ms")
    run.set_defaults(func=cmd_run)

    serve = commands.add_parser("serve", help="serve one live presentation client")
    _add_common_run_args(serve)
    serve.add_argument("--listen", default="ws://127.0.0.1:8765", help="endpoint to listen on")
    serve.add_argument("--accept-timeout", type=float, default=60.0, help="seconds to wait for a client")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
