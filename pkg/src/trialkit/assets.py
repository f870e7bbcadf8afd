"""Preloaded stimulus assets: PCM audio, raster images, instruction text.

Everything time-consuming happens here, before the trials start: files are
read, decoded and kept resident so the in-trial trigger path never touches
the file system.  Handles carry the decoded metadata the engine needs for
gating arithmetic plus the raw bytes shipped to presentation clients.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import EngineError
from .model import DisplayImageFile, PlaySound, Script, SettingsGroup
from .parser import resolve_arg


class AssetKind(Enum):
    AUDIO = "audio"
    IMAGE = "image"
    TEXT = "text"


_AUDIO_SUFFIXES = {".wav"}
_IMAGE_SUFFIXES = {".bmp", ".png"}


def kind_for_path(path: str) -> AssetKind:
    suffix = Path(path).suffix.lower()
    if suffix in _AUDIO_SUFFIXES:
        return AssetKind.AUDIO
    if suffix in _IMAGE_SUFFIXES:
        return AssetKind.IMAGE
    return AssetKind.TEXT


@dataclass(frozen=True, slots=True)
class AudioInfo:
    sample_rate: int
    channels: int
    sample_count: int  # frames per channel
    sample_width: int  # bytes per sample


@dataclass(frozen=True, slots=True)
class StimulusHandle:
    """An asset resident in memory, playable without further file access."""

    asset_id: str
    kind: AssetKind
    payload: bytes
    audio: AudioInfo | None = None
    image_size: tuple[int, int] | None = None
    text: str | None = None


def _decode_audio(asset_id: str, payload: bytes) -> StimulusHandle:
    try:
        with wave.open(io.BytesIO(payload)) as reader:
            info = AudioInfo(
                sample_rate=reader.getframerate(),
                channels=reader.getnchannels(),
                sample_count=reader.getnframes(),
                sample_width=reader.getsampwidth(),
            )
    except (wave.Error, EOFError) as exc:
        raise EngineError("E_DECODE", f"{asset_id}: not a PCM wave file ({exc})") from exc
    if info.sample_width not in (1, 2):
        raise EngineError("E_DECODE", f"{asset_id}: only 8/16-bit PCM supported")
    return StimulusHandle(asset_id, AssetKind.AUDIO, payload, audio=info)


def _decode_image(asset_id: str, payload: bytes) -> StimulusHandle:
    try:
        with Image.open(io.BytesIO(payload)) as img:
            size = img.size
    except UnidentifiedImageError as exc:
        raise EngineError("E_DECODE", f"{asset_id}: not a decodable image") from exc
    return StimulusHandle(asset_id, AssetKind.IMAGE, payload, image_size=size)


def _decode_text(asset_id: str, payload: bytes) -> StimulusHandle:
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError:
        text = payload.decode("latin-1")
    return StimulusHandle(asset_id, AssetKind.TEXT, payload, text=text)


class AssetStore:
    """Cache of preloaded stimuli, keyed by script-relative path."""

    def __init__(self, root: str | Path = "."):
        self.root = Path(root)
        self._handles: dict[str, StimulusHandle] = {}
        self.preload_count = 0  # reads performed; trials must not add to it

    def preload(self, asset_id: str, kind: AssetKind | None = None) -> StimulusHandle:
        if asset_id in self._handles:
            return self._handles[asset_id]
        kind = kind or kind_for_path(asset_id)
        path = self.root / asset_id
        try:
            payload = path.read_bytes()
        except OSError as exc:
            raise EngineError("E_ASSET_MISSING", f"cannot read {path}") from exc
        self.preload_count += 1
        if kind is AssetKind.AUDIO:
            handle = _decode_audio(asset_id, payload)
        elif kind is AssetKind.IMAGE:
            handle = _decode_image(asset_id, payload)
        else:
            handle = _decode_text(asset_id, payload)
        self._handles[asset_id] = handle
        return handle

    def get(self, asset_id: str) -> StimulusHandle:
        try:
            return self._handles[asset_id]
        except KeyError:
            raise EngineError("E_ASSET_MISSING", f"asset {asset_id!r} was not preloaded") from None

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._handles

    def handles(self) -> list[StimulusHandle]:
        return list(self._handles.values())


def samples(handle: StimulusHandle) -> np.ndarray:
    """Decoded PCM frames, shape (frames, channels)."""
    if handle.audio is None:
        raise EngineError("E_DECODE", f"{handle.asset_id} is not audio")
    with wave.open(io.BytesIO(handle.payload)) as reader:
        raw = reader.readframes(reader.getnframes())
    dtype = np.uint8 if handle.audio.sample_width == 1 else np.dtype("<i2")
    data = np.frombuffer(raw, dtype=dtype)
    return data.reshape(-1, handle.audio.channels)


def apply_gain(handle: StimulusHandle, scale: float) -> np.ndarray:
    """Scale PCM samples, clamping to the sample range rather than wrapping."""
    data = samples(handle)
    if handle.audio is not None and handle.audio.sample_width == 1:
        scaled = (data.astype(np.float64) - 128.0) * scale + 128.0
        return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    scaled = data.astype(np.float64) * scale
    return np.clip(np.rint(scaled), -32768, 32767).astype(np.int16)


def collect_assets(script: Script, group: SettingsGroup) -> list[tuple[str, AssetKind]]:
    """Every (path, kind) a session will need, resolved over all trials."""
    found: dict[str, AssetKind] = {}
    if group.instruction_file:
        found[group.instruction_file] = AssetKind.TEXT
    for step in script.events:
        command = step.command
        if isinstance(command, PlaySound):
            for trial in script.trials:
                found.setdefault(resolve_arg(command.source, trial), AssetKind.AUDIO)
        elif isinstance(command, DisplayImageFile):
            for trial in script.trials:
                found.setdefault(resolve_arg(command.source, trial), AssetKind.IMAGE)
    if group.sound_feedback is not None:
        found.setdefault(group.sound_feedback.positive, AssetKind.AUDIO)
        found.setdefault(group.sound_feedback.negative, AssetKind.AUDIO)
    return list(found.items())


def preload_all(store: AssetStore, script: Script, group: SettingsGroup) -> None:
    for asset_id, kind in collect_assets(script, group):
        store.preload(asset_id, kind)
