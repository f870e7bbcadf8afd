from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from trialkit.assets import AssetStore, preload_all
from trialkit.demo import (
    GATING_DEMO_SCRIPT,
    MINIMAL_PAIRS_SCRIPT,
    MINIMAL_PAIRS_SESSION_SCHEDULE,
    MINIMAL_PAIRS_SESSION_SCRIPT,
    VOLUME_DEMO_SCRIPT,
)
from trialkit.errors import EngineError, SessionAborted
from trialkit.model import InputDevice, default_group
from trialkit.parser import parse_script
from trialkit.scheduler import (
    Correctness,
    InputEvent,
    Phase,
    build_run_plan,
    evaluate_correctness,
    execute_trial,
    match_input,
    run_session,
)
from trialkit.simulate import ScheduleEntry, SimulatedSubject, load_schedule
from trialkit.timing import LatencyProfile


@pytest.fixture(scope="module")
def catalog():
    return parse_script(MINIMAL_PAIRS_SCRIPT).script


@pytest.fixture(scope="module")
def session_script():
    return parse_script(MINIMAL_PAIRS_SESSION_SCRIPT).script


@pytest.fixture()
def session_assets(demo_ws, session_script):
    store = AssetStore(demo_ws["assets"])
    preload_all(store, session_script, session_script.group())
    return store


def entry(trial_id, code, latency_ms):
    return ScheduleEntry(trial_id, code, Fraction(latency_ms))


# --- planning ------------------------------------------------------------

def test_training_plan_verbatim(catalog):
    plan = build_run_plan(catalog, catalog.group(), Phase.TRAINING, seed=9)
    assert plan.trial_ids == (1, 3, 4, 6)
    assert plan.phase is Phase.TRAINING


def test_training_requires_training_order(session_script):
    with pytest.raises(EngineError) as err:
        build_run_plan(session_script, session_script.group(), Phase.TRAINING)
    assert err.value.code == "E_NO_TRAINING"


def test_fixed_plan_is_script_order(session_script):
    plan = build_run_plan(session_script, session_script.group(), Phase.TEST)
    assert plan.trial_ids == (4, 1, 14, 17, 20, 12, 8)


def test_random_plan_is_reproducible_permutation(catalog):
    group = catalog.group()
    for seed in range(20):
        plan_a = build_run_plan(catalog, group, Phase.TEST, seed)
        plan_b = build_run_plan(catalog, group, Phase.TEST, seed)
        assert plan_a.trial_ids == plan_b.trial_ids
        assert sorted(plan_a.trial_ids) == sorted(catalog.trial_ids())


def test_random_plan_requires_seed(catalog):
    with pytest.raises(ValueError):
        build_run_plan(catalog, catalog.group(), Phase.TEST, seed=None)


# --- input matching ------------------------------------------------------

def test_match_input_by_device_and_code(catalog):
    input_map = catalog.group().input_map
    assert match_input(InputEvent(InputDevice.KEYBOARD, "CK_1", 0), input_map) == "Choix1"
    assert match_input(InputEvent(InputDevice.KEYBOARD, "VK_NUMPAD2", 0), input_map) == "Choix2"
    assert match_input(InputEvent(InputDevice.BUTTON_BOX, "BK_01", 0), input_map) == "Choix1"
    assert match_input(InputEvent(InputDevice.KEYBOARD, "CK_Z", 0), input_map) is None
    # a button-box event never matches a keyboard code
    assert match_input(InputEvent(InputDevice.BUTTON_BOX, "CK_1", 0), input_map) is None


# --- correctness ---------------------------------------------------------

def test_correctness_against_trial_column(catalog):
    group = catalog.group()
    assert evaluate_correctness("Choix2", catalog.trial(1), group) is Correctness.OK
    assert evaluate_correctness("Choix2", catalog.trial(4), group) is Correctness.ERR
    assert evaluate_correctness(None, catalog.trial(8), group) is Correctness.NOT_APPLICABLE


def test_correctness_without_correct_setting(catalog):
    assert evaluate_correctness("anything", catalog.trial(1), default_group()) is Correctness.NOT_APPLICABLE


# --- trial execution -----------------------------------------------------

def test_execute_trial_response_and_rtime(session_script, session_assets):
    group = session_script.group()
    io = SimulatedSubject({1: entry(1, "CK_2", 748)})
    outcome = execute_trial(session_script.trial(1), session_script.events_in_order(), group, io, session_assets)
    assert outcome.response == "Choix2"
    assert outcome.correctness is Correctness.OK
    assert outcome.rtime_ms == 748
    assert outcome.response_time == outcome.stimulus_onset + 748_000


def test_execute_trial_timeout(session_script, session_assets):
    group = session_script.group()
    io = SimulatedSubject({})  # silent subject
    outcome = execute_trial(session_script.trial(8), session_script.events_in_order(), group, io, session_assets)
    assert outcome.response is None
    assert outcome.correctness is Correctness.NOT_APPLICABLE
    assert outcome.rtime_ms == 0
    assert outcome.response_time is None


def test_window_boundary_is_closed(session_script, session_assets):
    group = session_script.group()
    on_time = SimulatedSubject({1: entry(1, "CK_2", 2000)})
    outcome = execute_trial(session_script.trial(1), session_script.events_in_order(), group, on_time, session_assets)
    assert outcome.response == "Choix2" and outcome.rtime_ms == 2000

    late = SimulatedSubject({1: entry(1, "CK_2", 2001)})
    outcome = execute_trial(session_script.trial(1), session_script.events_in_order(), group, late, session_assets)
    assert outcome.response is None and outcome.rtime_ms == 0


def test_prewindow_events_are_discarded(session_script, session_assets):
    # Stimulus onset is shifted 50 ms by latency; an event stamped earlier
    # than the onset must not close the window even though it is mapped.
    group = session_script.group()
    io = SimulatedSubject(
        latency=LatencyProfile(play_latency_ms=50, display_latency_ms=50),
        extra_events=[InputEvent(InputDevice.KEYBOARD, "CK_1", 10_000)],
    )
    outcome = execute_trial(session_script.trial(1), session_script.events_in_order(), group, io, session_assets)
    assert outcome.response is None


def test_first_mapped_event_wins(session_script, session_assets):
    group = session_script.group()
    io = SimulatedSubject(
        extra_events=[
            InputEvent(InputDevice.KEYBOARD, "CK_9", 100_000),  # unmapped, skipped
            InputEvent(InputDevice.KEYBOARD, "CK_2", 300_000),
            InputEvent(InputDevice.KEYBOARD, "CK_1", 400_000),
        ],
    )
    outcome = execute_trial(session_script.trial(1), session_script.events_in_order(), group, io, session_assets)
    assert outcome.response == "Choix2"
    assert outcome.rtime_ms == 300


def test_feedback_played_on_wrong_answer(demo_ws):
    from trialkit.demo import FEEDBACK_SCRIPT

    script = parse_script(FEEDBACK_SCRIPT).script
    group = script.group()
    store = AssetStore(demo_ws["assets"])
    preload_all(store, script, group)
    wrong = SimulatedSubject({1: entry(1, "CK_1", 400)})  # correct answer is 'faute'
    outcome = execute_trial(script.trial(1), script.events_in_order(), group, wrong, store)
    assert outcome.correctness is Correctness.ERR
    assert wrong.played[-1][0] == "glass.wav"

    right = SimulatedSubject({1: entry(1, "CK_2", 400)})
    execute_trial(script.trial(1), script.events_in_order(), group, right, store)
    assert right.played[-1][0] == "clap.wav"


def test_no_feedback_without_judgement(session_script, session_assets):
    # No SOUND_FEEDBACK configured: only the stimulus plays.
    group = session_script.group()
    io = SimulatedSubject({1: entry(1, "CK_2", 748)})
    execute_trial(session_script.trial(1), session_script.events_in_order(), group, io, session_assets)
    assert [p[0] for p in io.played] == ["bain.wav"]


def test_no_feedback_on_timeout(demo_ws):
    from trialkit.demo import FEEDBACK_SCRIPT

    script = parse_script(FEEDBACK_SCRIPT).script
    group = script.group()
    store = AssetStore(demo_ws["assets"])
    preload_all(store, script, group)
    silent = SimulatedSubject({})
    execute_trial(script.trial(1), script.events_in_order(), group, silent, store)
    assert silent.played == []


def test_pause_elapses_after_feedback(demo_ws):
    from trialkit.demo import FEEDBACK_SCRIPT

    script = parse_script(FEEDBACK_SCRIPT).script
    group = script.group()  # PAUSE=500
    store = AssetStore(demo_ws["assets"])
    preload_all(store, script, group)
    io = SimulatedSubject({1: entry(1, "CK_2", 400)})
    execute_trial(script.trial(1), script.events_in_order(), group, io, store)
    # clock: display onset 0, response 400 ms, feedback at 400 ms, then 500 ms pause
    assert io.clock.now() == 900_000


def test_volume_gain_passed_to_playback(demo_ws):
    script = parse_script(VOLUME_DEMO_SCRIPT).script
    group = script.group()
    store = AssetStore(demo_ws["assets"])
    preload_all(store, script, group)
    io = SimulatedSubject({tid: entry(tid, "CK_1", 500) for tid in (1, 2, 3)})
    for tid in (1, 2, 3):
        execute_trial(script.trial(tid), script.events_in_order(), group, io, store)
    gains = [round(p[1], 5) for p in io.played]
    assert gains == [1.0, 0.70795, 0.50119]


def test_gating_range_passed_to_playback(demo_ws):
    script = parse_script(GATING_DEMO_SCRIPT).script
    group = script.group()
    store = AssetStore(demo_ws["assets"])
    preload_all(store, script, group)
    io = SimulatedSubject({1: entry(1, "CK_1", 500)})
    execute_trial(script.trial(1), script.events_in_order(), group, io, store)
    # demo assets are 16 kHz: 200 ms -> 3200 frames
    assert io.played == [("bele.wav", 1.0, 0, 3200)]


def test_window_anchored_at_get_input_when_no_stimulus(session_assets):
    text = (
        "[TRIAL_DATA]\nTRIAL1=<x>\n[TRIAL_EVENTS]\nX10=BEGIN\nX20=GET_INPUT<DELAY 100>\nX30=END\n"
        "[SETTINGS_G]\nINPUT=<Choix1 CK_1>\n"
    )
    script = parse_script(text).script
    io = SimulatedSubject(extra_events=[InputEvent(InputDevice.KEYBOARD, "CK_1", 50_000)])
    outcome = execute_trial(script.trial(1), script.events_in_order(), script.group(), io, session_assets)
    assert outcome.response == "Choix1"
    assert outcome.rtime_ms == 50


def test_display_only_trial_is_not_an_error(session_assets, session_script):
    text = "[TRIAL_DATA]\nTRIAL1=<hello>\n[TRIAL_EVENTS]\nX10=BEGIN\nX20=DISPLAY_TEXT<#1>\nX30=END\n"
    script = parse_script(text).script
    outcome = execute_trial(
        script.trial(1), script.events_in_order(), session_script.group(), SimulatedSubject(), session_assets
    )
    assert outcome.response is None
    assert outcome.correctness is Correctness.NOT_APPLICABLE
    assert outcome.rtime_ms == 0


def test_unbounded_window_without_response_stalls(demo_ws):
    script = parse_script(VOLUME_DEMO_SCRIPT).script
    group = script.group()
    store = AssetStore(demo_ws["assets"])
    preload_all(store, script, group)
    io = SimulatedSubject({})
    with pytest.raises(EngineError) as err:
        execute_trial(script.trial(1), script.events_in_order(), group, io, store)
    assert err.value.code == "E_STALL"


# --- sessions ------------------------------------------------------------

def test_run_session_plan_order_and_instructions(demo_ws, catalog):
    group = catalog.group()
    store = AssetStore(demo_ws["assets"])
    preload_all(store, catalog, group)
    plan = build_run_plan(catalog, group, Phase.TEST, seed=7)
    io = SimulatedSubject({tid: entry(tid, "CK_1", 300) for tid in catalog.trial_ids()})
    outcomes = run_session(catalog, group, plan, io, store, "zz")
    assert [o.trial_id for o in outcomes] == list(plan.trial_ids)
    assert io.presented[0] == ("text", store.get("Pairemin.txt").text)


def test_run_session_empty_plan(session_script, session_assets):
    from trialkit.scheduler import RunPlan

    outcomes = run_session(
        session_script, session_script.group(), RunPlan(Phase.TEST, ()), SimulatedSubject(), session_assets, "zz"
    )
    assert outcomes == []


def test_run_session_deterministic(session_script, session_assets):
    group = session_script.group()
    plan = build_run_plan(session_script, group, Phase.TEST, 1)
    schedule = load_schedule(MINIMAL_PAIRS_SESSION_SCHEDULE)
    first = run_session(session_script, group, plan, SimulatedSubject(schedule), session_assets, "ca")
    second = run_session(session_script, group, plan, SimulatedSubject(schedule), session_assets, "ca")
    assert first == second


def test_run_session_aborts_with_partial_outcomes(demo_ws):
    script = parse_script(VOLUME_DEMO_SCRIPT).script
    group = script.group()
    store = AssetStore(demo_ws["assets"])
    preload_all(store, script, group)
    io = SimulatedSubject({1: entry(1, "CK_1", 100)})  # trials 2,3 unanswered: stall
    plan = build_run_plan(script, group, Phase.TEST)
    with pytest.raises(SessionAborted) as err:
        run_session(script, group, plan, io, store, "zz")
    assert err.value.code == "E_STALL"
    assert [o.trial_id for o in err.value.outcomes] == [1]


def test_latency_does_not_shift_rtime(session_script, session_assets):
    group = session_script.group()
    for play_latency in (0, 0.5, 10, 100):
        io = SimulatedSubject(
            {1: entry(1, "CK_2", 748)},
            latency=LatencyProfile(play_latency_ms=play_latency, display_latency_ms=5),
        )
        outcome = execute_trial(session_script.trial(1), session_script.events_in_order(), group, io, session_assets)
        assert outcome.rtime_ms == 748


def test_input_jitter_delays_delivery_not_timestamps(session_script, session_assets):
    group = session_script.group()
    io = SimulatedSubject(
        {1: entry(1, "CK_2", 748)},
        latency=LatencyProfile(input_poll_jitter_ms=30),
    )
    outcome = execute_trial(session_script.trial(1), session_script.events_in_order(), group, io, session_assets)
    assert outcome.rtime_ms == 748


@given(st.integers(0, 2**63 - 1))
def test_random_plans_are_permutations(seed):
    script = parse_script(MINIMAL_PAIRS_SCRIPT).script
    plan = build_run_plan(script, script.group(), Phase.TEST, seed)
    assert sorted(plan.trial_ids) == sorted(script.trial_ids())
