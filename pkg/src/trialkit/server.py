"""Engine-side session service: one subject, one localhost endpoint.

The receive path runs on the connection handler thread and only appends to
time-ordered queues; the session loop consumes them.  Neither side blocks
the other.  The response-window timeout is enforced engine-side from the
window's onset echo plus delay, with a grace factor of 2x the delay before
the client is declared lost, so a hung client cannot stall a session.
"""

from __future__ import annotations

import queue
import threading
import time
from typing import Callable

from websockets.exceptions import ConnectionClosed
from websockets.sync.server import serve

from .assets import AssetStore
from .errors import EngineError, SessionAborted
from .model import Script, SettingsGroup, TextFormat
from .protocol import (
    PROTOCOL_VERSION,
    Bye,
    Fault,
    Input,
    Onset,
    OpenWindow,
    Play,
    Preload,
    PresentImage,
    PresentText,
    Ready,
    SessionEnd,
    decode_message,
    encode_message,
)
from .scheduler import InputEvent, RunPlan, SubjectPort, TrialOutcome, run_session
from .timing import Microseconds

HANDSHAKE_TIMEOUT_S = 30.0
ONSET_GRACE_S = 10.0
_POLL_S = 0.05


class _SessionHub:
    """Shared state between the receive path and the session loop."""

    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.claimed = False
        self.conn = None
        self.ready: Ready | None = None
        self.ready_event = threading.Event()
        self.onsets: queue.Queue[Onset] = queue.Queue()
        self.inputs: queue.Queue[InputEvent] = queue.Queue()
        self.lost = threading.Event()
        self.lost_reason = ""
        self.done = threading.Event()
        self.last_client_ts: Microseconds = 0

    def mark_lost(self, reason: str) -> None:
        if not self.done.is_set():
            self.lost_reason = reason
            self.lost.set()


def _make_handler(hub: _SessionHub) -> Callable:
    def handler(conn) -> None:
        with hub.lock:
            first = not hub.claimed
            if first:
                hub.claimed = True
        if not first:
            try:
                conn.send(encode_message(Fault("E_BUSY", "a subject is already connected")))
            finally:
                conn.close()
            return
        try:
            raw = conn.recv(timeout=HANDSHAKE_TIMEOUT_S)
            msg = decode_message(raw)
        except (TimeoutError, ConnectionClosed, EngineError):
            with hub.lock:
                hub.claimed = False
            return
        if not isinstance(msg, Ready) or msg.version != PROTOCOL_VERSION:
            try:
                conn.send(encode_message(Fault("E_PROTO", f"protocol version {PROTOCOL_VERSION} required")))
            finally:
                conn.close()
            with hub.lock:
                hub.claimed = False
            return
        hub.conn = conn
        hub.ready = msg
        hub.ready_event.set()
        try:
            for raw in conn:
                incoming = decode_message(raw)
                if isinstance(incoming, Onset):
                    hub.last_client_ts = max(hub.last_client_ts, incoming.client_ts)
                    hub.onsets.put(incoming)
                elif isinstance(incoming, Input):
                    hub.last_client_ts = max(hub.last_client_ts, incoming.client_ts)
                    hub.inputs.put(InputEvent(incoming.device, incoming.code, incoming.client_ts))
                elif isinstance(incoming, Fault):
                    hub.mark_lost(f"client fault {incoming.code}: {incoming.message}")
                    return
                elif isinstance(incoming, Bye):
                    return
        except (ConnectionClosed, EngineError) as exc:
            hub.mark_lost(f"connection lost: {exc}")
        finally:
            hub.mark_lost("connection closed")

    return handler


class WireSubject(SubjectPort):
    """Subject port speaking the wire protocol to a connected client."""

    def __init__(self, hub: _SessionHub):
        self.hub = hub
        self._next_id = 0
        self._window_wall: float = 0.0

    def _send(self, msg) -> None:
        if self.hub.lost.is_set():
            raise EngineError("E_CLIENT_LOST", self.hub.lost_reason or "client lost")
        try:
            self.hub.conn.send(encode_message(msg))
        except (ConnectionClosed, OSError) as exc:
            self.hub.mark_lost(str(exc))
            raise EngineError("E_CLIENT_LOST", f"send failed: {exc}") from exc

    def _await_onset(self, msg_id: int) -> Microseconds:
        deadline = time.monotonic() + ONSET_GRACE_S
        while True:
            if self.hub.lost.is_set():
                raise EngineError("E_CLIENT_LOST", self.hub.lost_reason or "client lost")
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise EngineError("E_CLIENT_LOST", f"no onset echo for message {msg_id}")
            try:
                onset = self.hub.onsets.get(timeout=min(remaining, _POLL_S))
            except queue.Empty:
                continue
            if onset.ref == msg_id:
                return onset.client_ts
            # Stale echo from an earlier command; every command awaits its
            # own echo so this indicates a confused client.  Drop it.

    def begin_trial(self, trial_id: int) -> None:
        pass

    def now(self) -> Microseconds:
        return self.hub.last_client_ts

    def present_text(self, text: str, fmt: TextFormat) -> Microseconds:
        self._next_id += 1
        self._send(PresentText(self._next_id, text, fmt))
        return self._await_onset(self._next_id)

    def present_image(self, asset_id: str) -> Microseconds:
        self._next_id += 1
        self._send(PresentImage(self._next_id, asset_id))
        return self._await_onset(self._next_id)

    def play(self, asset_id: str, gain: float, first: int, last: int) -> Microseconds:
        self._next_id += 1
        self._send(Play(self._next_id, asset_id, gain, first, last))
        return self._await_onset(self._next_id)

    def open_window(self, window_id: str) -> None:
        self._send(OpenWindow(window_id))
        self._window_wall = time.monotonic()

    def next_input(self, open_ts: Microseconds, deadline: Microseconds | None) -> InputEvent | None:
        budget_s: float | None = None
        if deadline is not None:
            budget_s = 2.0 * (deadline - open_ts) / 1e6
        while True:
            if self.hub.lost.is_set():
                raise EngineError("E_CLIENT_LOST", self.hub.lost_reason or "client lost")
            wait = _POLL_S
            if budget_s is not None:
                remaining = budget_s - (time.monotonic() - self._window_wall)
                if remaining <= 0:
                    return None
                wait = min(remaining, _POLL_S)
            try:
                event = self.hub.inputs.get(timeout=wait)
            except queue.Empty:
                continue
            if deadline is not None and event.client_ts > deadline:
                return None  # strictly after the window: resolves as timeout
            return event

    def wait_ms(self, ms: int) -> None:
        time.sleep(ms / 1000.0)

    def end_session(self) -> None:
        self.hub.done.set()
        try:
            self._send(SessionEnd())
        except EngineError:
            pass


def push_preloads(io: WireSubject, assets: AssetStore) -> None:
    """Transfer every audio/image payload once, before the first trial."""
    for handle in assets.handles():
        if handle.kind.value in ("audio", "image"):
            io._send(Preload(handle.asset_id, handle.kind.value, handle.payload))


def serve_session(
    script: Script,
    group: SettingsGroup,
    plans: list[RunPlan],
    assets: AssetStore,
    subject_code: str,
    host: str = "127.0.0.1",
    port: int = 8765,
    accept_timeout_s: float = 60.0,
    on_outcome: Callable[[TrialOutcome, RunPlan], None] | None = None,
) -> tuple[list[TrialOutcome], Ready]:
    """Serve one client session and return its outcomes plus handshake info.

    Raises E_CLIENT_LOST if no client completes the handshake in time, and
    SessionAborted (partial outcomes preserved) if the client disappears
    mid-session.  Additional connection attempts are refused while a
    subject is active.
    """
    hub = _SessionHub()
    outcomes: list[TrialOutcome] = []
    with serve(_make_handler(hub), host, port) as server:
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            hub.ready_event.wait(accept_timeout_s)
            if hub.ready is None:
                raise EngineError("E_CLIENT_LOST", "no client completed the handshake")
            io = WireSubject(hub)
            push_preloads(io, assets)
            for index, plan in enumerate(plans):
                try:
                    produced = run_session(
                        script,
                        group,
                        plan,
                        io,
                        assets,
                        subject_code,
                        show_instructions=(index == 0),
                        on_outcome=(lambda o, p=plan: on_outcome(o, p)) if on_outcome else None,
                    )
                except SessionAborted as exc:
                    raise SessionAborted(exc.code, exc.message, outcomes + exc.outcomes) from exc
                outcomes.extend(produced)
            io.end_session()
            return outcomes, hub.ready
        finally:
            hub.done.set()
            server.shutdown()
