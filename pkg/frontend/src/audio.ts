/**
 * Web Audio playback with preload-then-trigger discipline.
 *
 * Buffers are decoded once at preload.  The engine's sample ranges refer to
 * frames of the *source* file, so the source rate is read from the wave
 * header (decodeAudioData may resample to the context rate but preserves
 * duration).  Onset timestamps come from the audio pipeline's scheduled
 * start time mapped onto the shared performance clock, not the call site.
 */

import { AudioOut, MonotonicClock } from "./client.js";

/** Sample rate and frame count from a RIFF/WAVE header. */
export function waveInfo(bytes: Uint8Array): { sampleRate: number; frames: number } {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (view.getUint32(0, false) !== 0x52494646 || view.getUint32(8, false) !== 0x57415645) {
    throw new Error("not a RIFF/WAVE file");
  }
  let offset = 12;
  let sampleRate = 0;
  let blockAlign = 0;
  let dataSize = 0;
  while (offset + 8 <= view.byteLength) {
    const chunkId = view.getUint32(offset, false);
    const chunkSize = view.getUint32(offset + 4, true);
    if (chunkId === 0x666d7420) {
      // "fmt "
      sampleRate = view.getUint32(offset + 12, true);
      blockAlign = view.getUint16(offset + 20, true);
    } else if (chunkId === 0x64617461) {
      // "data"
      dataSize = chunkSize;
    }
    offset += 8 + chunkSize + (chunkSize % 2);
  }
  if (!sampleRate || !blockAlign) throw new Error("wave header missing fmt chunk");
  return { sampleRate, frames: Math.floor(dataSize / blockAlign) };
}

interface CachedAudio {
  buffer: AudioBuffer;
  sourceRate: number;
}

export class WebAudioOut implements AudioOut {
  private readonly cache = new Map<string, CachedAudio>();

  constructor(
    private readonly ctx: AudioContext,
    private readonly clock: MonotonicClock,
  ) {}

  async preload(assetId: string, payload: Uint8Array): Promise<void> {
    const { sampleRate } = waveInfo(payload);
    const copy = payload.slice().buffer; // decodeAudioData detaches its input
    const buffer = await this.ctx.decodeAudioData(copy);
    this.cache.set(assetId, { buffer, sourceRate: sampleRate });
  }

  async play(assetId: string, gain: number, first: number, last: number): Promise<number> {
    const cached = this.cache.get(assetId);
    if (!cached) throw new Error(`asset ${assetId} not preloaded`);
    if (this.ctx.state === "suspended") await this.ctx.resume();

    const source = this.ctx.createBufferSource();
    source.buffer = cached.buffer;
    const gainNode = this.ctx.createGain();
    gainNode.gain.value = gain;
    source.connect(gainNode).connect(this.ctx.destination);

    const offsetS = first / cached.sourceRate;
    const durationS = Math.max(0, (last - first) / cached.sourceRate);
    const startAt = this.ctx.currentTime + 0.005;
    source.start(startAt, offsetS, durationS);

    // Map the scheduled context time onto the performance clock and add the
    // reported output latency; this is as close to the physical onset as
    // the platform allows.
    const latencyS = this.outputLatencyS();
    const deltaUs = (startAt - this.ctx.currentTime + latencyS) * 1e6;
    return Math.round(this.clock.nowUs() + deltaUs);
  }

  reportedLatencyMs(): number | null {
    return Math.round(this.outputLatencyS() * 1e5) / 100;
  }

  private outputLatencyS(): number {
    const ctx = this.ctx as AudioContext & { outputLatency?: number };
    return ctx.outputLatency ?? ctx.baseLatency ?? 0;
  }
}
