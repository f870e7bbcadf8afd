"""Acceptance suite: one test per release criterion, at pinned tolerances.

The conftest hook prints a PASS/FAIL line per criterion when this module
runs, so `pytest tests/test_acceptance.py -s` doubles as the release gate.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction
from pathlib import Path

import mpmath

from trialkit.assets import AssetStore, preload_all
from trialkit.cli import main
from trialkit.demo import (
    MINIMAL_PAIRS_SCRIPT,
    write_sine_wav,
)
from trialkit.model import ColumnRef, InputDevice, Position, TrialOrder, Var, Column
from trialkit.parser import parse_script, validate_script
from trialkit.response_log import ResponseLogger
from trialkit.scheduler import InputEvent, Phase, build_run_plan, execute_trial, run_session
from trialkit.server import serve_session
from trialkit.simulate import ScheduleEntry, ScriptedWireClient, SimulatedSubject
from trialkit.timing import LatencyProfile, gain_from_db, gate_bounds

GOLDEN = Path(__file__).parent / "data" / "golden" / "minimal_pairs_ca.tsv"

mpmath.mp.dps = 50


# 1 -----------------------------------------------------------------------

def test_minimal_pairs_parse_golden():
    started = time.perf_counter()
    result = parse_script(MINIMAL_PAIRS_SCRIPT)
    script = result.script
    assert script is not None and not result.errors
    diags = validate_script(script)
    elapsed = time.perf_counter() - started

    assert len(script.trials) >= 4
    assert all(len(t.columns) == 5 for t in script.trials)
    assert len(script.events) == 5

    group = script.group()
    assert group.name == "GROUP1"
    assert group.instruction_file == "Pairemin.txt"
    assert group.training_order == (1, 3, 4, 6)
    assert group.trial_order is TrialOrder.RANDOM
    fmt = group.text_format
    assert (fmt.font, fmt.size) == ("Arial", 30)
    assert fmt.bkcolor == (0, 0, 255) and fmt.txtcolor == (255, 255, 0)
    assert fmt.position == frozenset({Position.HCENTER, Position.VCENTER})
    assert [m.label for m in group.input_map] == ["Choix1", "Choix2"]
    assert all(len(m.codes) == 3 for m in group.input_map)
    assert group.correct == ColumnRef(3)
    assert group.pause_ms == 0
    assert group.response_format == (
        Var.SUBJECT, Var.TRIAL, Column(1), Column(2), Column(3),
        Var.RESPONSE, Var.ERROR, Column(4), Column(5), Var.RTIME,
    )

    assert [d for d in diags if d.code.startswith("E_")] == []
    assert elapsed < 1.0


# 2 -----------------------------------------------------------------------

def test_recorded_session_reproduced(demo_ws, tmp_path):
    out = tmp_path / "ca.tsv"
    code = main(
        [
            "run",
            "--script", str(demo_ws["minimal_pairs_session"]),
            "--schedule", str(demo_ws["session_schedule"]),
            "--subject", "ca",
            "--seed", "1",
            "--assets", str(demo_ws["assets"]),
            "--out", str(out),
        ]
    )
    assert code == 0
    assert out.read_bytes() == GOLDEN.read_bytes()


# 3 -----------------------------------------------------------------------

def test_latency_invariance(tmp_path):
    write_sine_wav(tmp_path / "beep.wav", ms=100)
    script = parse_script(
        "[TRIAL_DATA]\nTRIAL1=<beep.wav>\n"
        "[TRIAL_EVENTS]\nX10=BEGIN\nX20=PLAY_SOUND<#1>\nX30=GET_INPUT<DELAY 2000>\nX40=END\n"
        "[SETTINGS_G]\nINPUT=<Hit CK_1>\nRESPONSE_FORMAT=<$TRIAL><$RESPONSE><$RTIME>\n"
    ).script
    group = script.group()
    assets = AssetStore(tmp_path)
    preload_all(assets, script, group)

    passed = 0
    for play_latency in (0, 0.5, 10, 100):
        for offset in (1, 50, 748, 1999):
            io = SimulatedSubject(
                {1: ScheduleEntry(1, "CK_1", Fraction(offset))},
                latency=LatencyProfile(play_latency_ms=play_latency),
            )
            outcome = execute_trial(script.trial(1), script.events_in_order(), group, io, assets)
            assert outcome.response == "Hit"
            assert abs(outcome.rtime_ms - offset) <= 1, (play_latency, offset)
            passed += 1
    assert passed == 16


# 4 -----------------------------------------------------------------------

def test_gain_oracle():
    for db in (0, -3, -6):
        oracle = float(mpmath.power(10, mpmath.mpf(db) / 20))
        assert abs(gain_from_db(db) - oracle) < 1e-5

    rng = random.Random(20260810)
    for _ in range(1000):
        a = rng.uniform(-60, 20)
        b = rng.uniform(-60, 20)
        combined = gain_from_db(a + b)
        product = gain_from_db(a) * gain_from_db(b)
        assert abs(combined - product) <= 1e-9 * max(abs(combined), abs(product))


# 5 -----------------------------------------------------------------------

def _floor_samples(rate: int, ms_text: str) -> int:
    # independent route: integer arithmetic on the scaled decimal numeral
    if "." in ms_text:
        whole, frac = ms_text.split(".")
        p, q = int(whole + frac), 10 ** len(frac)
    else:
        p, q = int(ms_text), 1
    return rate * p // (1000 * q)


def test_gating_oracle():
    rng = random.Random(4)
    cases = [(44100, "0", "250"), (16000, "0", "200"), (22050, "0", "275")]
    for _ in range(100):
        rate = rng.choice([8000, 11025, 16000, 22050, 44100, 48000, rng.randrange(1000, 96000)])
        begin = rng.randrange(0, 2000)
        end = begin + rng.randrange(1, 2000)
        if rng.random() < 0.3:
            cases.append((rate, f"{begin}.{rng.randrange(10)}", f"{end}.{rng.randrange(1, 10)}"))
        else:
            cases.append((rate, str(begin), str(end)))

    for rate, begin, end in cases:
        sample_count = _floor_samples(rate, end) + rng.randrange(1, 50_000)
        first, last = gate_bounds(rate, sample_count, begin, end)
        assert first == _floor_samples(rate, begin)
        assert last == min(sample_count, _floor_samples(rate, end))
        assert last - first == min(sample_count, _floor_samples(rate, end)) - _floor_samples(rate, begin)

    assert gate_bounds(44100, 10**9, 0, 250) == (0, 11025)
    assert gate_bounds(16000, 10**9, 0, 200) == (0, 3200)


# 6 -----------------------------------------------------------------------

def test_randomized_plans():
    script = parse_script(MINIMAL_PAIRS_SCRIPT).script
    group = script.group()
    assert len(script.trials) == 20
    seen = set()
    for seed in range(50):
        plan = build_run_plan(script, group, Phase.TEST, seed)
        again = build_run_plan(script, group, Phase.TEST, seed)
        assert plan.trial_ids == again.trial_ids
        assert sorted(plan.trial_ids) == sorted(script.trial_ids())
        seen.add(plan.trial_ids)
    assert len(seen) >= 45


# 7 -----------------------------------------------------------------------

def test_response_window_boundaries(tmp_path):
    write_sine_wav(tmp_path / "beep.wav", ms=100)
    script = parse_script(
        "[TRIAL_DATA]\nTRIAL1=<beep.wav>\n"
        "[TRIAL_EVENTS]\nX10=BEGIN\nX20=PLAY_SOUND<#1>\nX30=GET_INPUT<DELAY 2000>\nX40=END\n"
        "[SETTINGS_G]\nINPUT=<Un CK_1><Deux CK_2>\n"
    ).script
    group = script.group()
    assets = AssetStore(tmp_path)
    preload_all(assets, script, group)
    events = script.events_in_order()
    trial = script.trial(1)

    # closed boundary: an event at exactly onset+delay is accepted
    at_edge = SimulatedSubject({1: ScheduleEntry(1, "CK_1", Fraction(2000))})
    outcome = execute_trial(trial, events, group, at_edge, assets)
    assert outcome.response == "Un" and outcome.rtime_ms == 2000

    # one millisecond later is rejected
    past_edge = SimulatedSubject({1: ScheduleEntry(1, "CK_1", Fraction(2001))})
    outcome = execute_trial(trial, events, group, past_edge, assets)
    assert outcome.response is None and outcome.rtime_ms == 0

    # events before the window opens never produce a response
    early = SimulatedSubject(
        latency=LatencyProfile(play_latency_ms=100),
        extra_events=[InputEvent(InputDevice.KEYBOARD, "CK_1", 99_000)],
    )
    outcome = execute_trial(trial, events, group, early, assets)
    assert outcome.response is None

    # only the first mapped event counts
    crowded = SimulatedSubject(
        extra_events=[
            InputEvent(InputDevice.KEYBOARD, "CK_9", 50_000),
            InputEvent(InputDevice.KEYBOARD, "CK_2", 700_000),
            InputEvent(InputDevice.KEYBOARD, "CK_1", 800_000),
        ],
    )
    outcome = execute_trial(trial, events, group, crowded, assets)
    assert outcome.response == "Deux" and outcome.rtime_ms == 700


# 8 -----------------------------------------------------------------------

def test_wire_equivalence(demo_ws, tmp_path, free_port):
    script = parse_script(MINIMAL_PAIRS_SCRIPT).script
    group = script.group()
    assets = AssetStore(demo_ws["assets"])
    preload_all(assets, script, group)
    seed = 42
    plan = build_run_plan(script, group, Phase.TEST, seed)

    codes = {tid: ("CK_1" if tid % 2 else "CK_2") for tid in script.trial_ids()}
    latencies = {tid: 300 + 17 * tid for tid in script.trial_ids()}

    headless_path = tmp_path / "headless.tsv"
    schedule = {tid: ScheduleEntry(tid, codes[tid], Fraction(latencies[tid])) for tid in codes}
    with ResponseLogger(headless_path, group.response_format) as logger:
        run_session(
            script, group, plan, SimulatedSubject(schedule), assets, "ca",
            on_outcome=lambda o: logger.log(o, script.trial(o.trial_id), "ca"),
        )

    wire_path = tmp_path / "wire.tsv"
    port = free_port()
    responses = [(codes[tid], latencies[tid]) for tid in plan.trial_ids]
    client = ScriptedWireClient(f"ws://127.0.0.1:{port}", responses)
    client_thread = None

    import threading

    def launch_client():
        time.sleep(0.2)
        client.run()

    client_thread = threading.Thread(target=launch_client, daemon=True)
    client_thread.start()
    with ResponseLogger(wire_path, group.response_format) as logger:
        outcomes, _ = serve_session(
            script, group, [plan], assets, "ca", "127.0.0.1", port,
            accept_timeout_s=15,
            on_outcome=lambda o, p: logger.log(o, script.trial(o.trial_id), "ca"),
        )
    client_thread.join(10)
    assert len(outcomes) == 20
    assert wire_path.read_bytes() == headless_path.read_bytes()
