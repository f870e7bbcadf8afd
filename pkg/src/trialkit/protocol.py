"""Wire protocol between the engine and one presentation client.

Messages are single JSON objects, one per transport frame (the transport is
a localhost WebSocket; frames are already length-delimited).  Asset payloads
travel once, at preload, base64-encoded; later commands reference asset ids
only.

engine -> client:
    preload       {asset_id, kind, payload}
    present_text  {id, text, format}
    present_image {id, asset_id}
    play          {id, asset_id, gain, first, last}   sample-frame range
    open_window   {window_id}
    session_end   {}
    fault         {code, message}                     refusal/abort notice

client -> engine:
    ready         {version, audio_latency_ms?}        handshake
    onset         {ref, client_ts}                    echo of id, actual onset
    input         {device, code, client_ts}
    fault         {code, message}                     e.g. unknown asset id
    bye           {}

Every present/play is answered by exactly one onset carrying the same id.
Any engine message implicitly closes the client's active response window.
All client_ts values come from one monotonic client clock; reaction times
are computed purely in that clock domain, so engine-client transport delay
and clock offset cancel exactly.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

from .errors import EngineError
from .model import InputDevice, Position, TextFormat
from .timing import Microseconds, compute_rtime

PROTOCOL_VERSION = 1


@dataclass(frozen=True, slots=True)
class Preload:
    asset_id: str
    kind: str  # audio | image | text
    payload: bytes


@dataclass(frozen=True, slots=True)
class PresentText:
    id: int
    text: str
    format: TextFormat


@dataclass(frozen=True, slots=True)
class PresentImage:
    id: int
    asset_id: str


@dataclass(frozen=True, slots=True)
class Play:
    id: int
    asset_id: str
    gain: float
    first: int
    last: int


@dataclass(frozen=True, slots=True)
class OpenWindow:
    window_id: str


@dataclass(frozen=True, slots=True)
class SessionEnd:
    pass


@dataclass(frozen=True, slots=True)
class Ready:
    version: int
    audio_latency_ms: float | None = None


@dataclass(frozen=True, slots=True)
class Onset:
    ref: int
    client_ts: Microseconds


@dataclass(frozen=True, slots=True)
class Input:
    device: InputDevice
    code: str
    client_ts: Microseconds


@dataclass(frozen=True, slots=True)
class Fault:
    code: str
    message: str


@dataclass(frozen=True, slots=True)
class Bye:
    pass


WireMessage = (
    Preload | PresentText | PresentImage | Play | OpenWindow | SessionEnd
    | Ready | Onset | Input | Fault | Bye
)


def _format_to_dict(fmt: TextFormat) -> dict:
    return {
        "font": fmt.font,
        "size": fmt.size,
        "bkcolor": list(fmt.bkcolor),
        "txtcolor": list(fmt.txtcolor),
        "position": [p.value for p in Position if p in fmt.position],
    }


def _format_from_dict(data: dict) -> TextFormat:
    return TextFormat(
        font=data["font"],
        size=data["size"],
        bkcolor=tuple(data["bkcolor"]),
        txtcolor=tuple(data["txtcolor"]),
        position=frozenset(Position(p) for p in data["position"]),
    )


def encode_message(msg: WireMessage) -> str:
    """One JSON text frame for a message."""
    if isinstance(msg, Preload):
        body = {
            "type": "preload",
            "asset_id": msg.asset_id,
            "kind": msg.kind,
            "payload": base64.b64encode(msg.payload).decode("ascii"),
        }
    elif isinstance(msg, PresentText):
        body = {"type": "present_text", "id": msg.id, "text": msg.text, "format": _format_to_dict(msg.format)}
    elif isinstance(msg, PresentImage):
        body = {"type": "present_image", "id": msg.id, "asset_id": msg.asset_id}
    elif isinstance(msg, Play):
        body = {
            "type": "play",
            "id": msg.id,
            "asset_id": msg.asset_id,
            "gain": msg.gain,
            "first": msg.first,
            "last": msg.last,
        }
    elif isinstance(msg, OpenWindow):
        body = {"type": "open_window", "window_id": msg.window_id}
    elif isinstance(msg, SessionEnd):
        body = {"type": "session_end"}
    elif isinstance(msg, Ready):
        body = {"type": "ready", "version": msg.version, "audio_latency_ms": msg.audio_latency_ms}
    elif isinstance(msg, Onset):
        body = {"type": "onset", "ref": msg.ref, "client_ts": msg.client_ts}
    elif isinstance(msg, Input):
        body = {"type": "input", "device": msg.device.value, "code": msg.code, "client_ts": msg.client_ts}
    elif isinstance(msg, Fault):
        body = {"type": "fault", "code": msg.code, "message": msg.message}
    elif isinstance(msg, Bye):
        body = {"type": "bye"}
    else:
        raise TypeError(f"not a wire message: {msg!r}")
    return json.dumps(body, separators=(",", ":"))


def decode_message(data: str | bytes) -> WireMessage:
    """Parse one frame; malformed frames raise E_PROTO."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EngineError("E_PROTO", "frame is not valid UTF-8") from exc
    if not data:
        raise EngineError("E_PROTO", "empty frame")
    try:
        body = json.loads(data)
    except json.JSONDecodeError as exc:
        raise EngineError("E_PROTO", f"frame is not valid JSON: {exc}") from exc
    if not isinstance(body, dict) or "type" not in body:
        raise EngineError("E_PROTO", "frame has no message type")
    kind = body["type"]
    try:
        if kind == "preload":
            return Preload(body["asset_id"], body["kind"], base64.b64decode(body["payload"]))
        if kind == "present_text":
            return PresentText(body["id"], body["text"], _format_from_dict(body["format"]))
        if kind == "present_image":
            return PresentImage(body["id"], body["asset_id"])
        if kind == "play":
            return Play(body["id"], body["asset_id"], body["gain"], body["first"], body["last"])
        if kind == "open_window":
            return OpenWindow(body["window_id"])
        if kind == "session_end":
            return SessionEnd()
        if kind == "ready":
            return Ready(body["version"], body.get("audio_latency_ms"))
        if kind == "onset":
            return Onset(body["ref"], body["client_ts"])
        if kind == "input":
            return Input(InputDevice(body["device"]), body["code"], body["client_ts"])
        if kind == "fault":
            return Fault(body["code"], body["message"])
        if kind == "bye":
            return Bye()
    except (KeyError, ValueError, TypeError) as exc:
        raise EngineError("E_PROTO", f"malformed {kind} frame: {exc}") from exc
    raise EngineError("E_PROTO", f"unknown message type {kind!r}")


def rt_from_client_timestamps(onset_ts: Microseconds, input_ts: Microseconds) -> int:
    """Reaction time computed entirely in the client clock domain.

    Both timestamps must come from the same client clock; any constant
    offset between engine and client time cancels by construction.
    """
    return compute_rtime(onset_ts, input_ts)
