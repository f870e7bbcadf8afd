/**
 * Session state machine, independent of browser APIs.
 *
 * Platform concerns arrive through adapters: a Transport carries frames, a
 * Display and an AudioOut present stimuli and report actual onsets on the
 * shared monotonic clock, and input capture calls sendInput().  Inputs are
 * forwarded only while a response window is open; any engine message closes
 * the active window.  After preload completes no network fetch happens
 * during a trial: stimuli play from the in-memory asset cache.
 */

import {
  ClientMessage,
  EngineMessage,
  PROTOCOL_VERSION,
  ProtocolError,
  TextStyle,
  decodeMessage,
  encodeMessage,
  payloadBytes,
} from "./protocol.js";

export interface Transport {
  send(text: string): void;
  onMessage(handler: (text: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

export interface MonotonicClock {
  /** Microseconds on one monotonic clock; never wall time. */
  nowUs(): number;
}

export interface Display {
  /** Resolves to the onset timestamp (client clock, us). */
  showText(text: string, format: TextStyle): Promise<number>;
  showImage(assetId: string, payload: Uint8Array): Promise<number>;
}

export interface AudioOut {
  /** Decode and cache; called once per asset at preload time. */
  preload(assetId: string, payload: Uint8Array): Promise<void>;
  /** Start playback of [first, last) source frames at the gain; resolves to the onset timestamp (us). */
  play(assetId: string, gain: number, first: number, last: number): Promise<number>;
  /** Measured output latency in ms, or null when the platform cannot tell. */
  reportedLatencyMs(): number | null;
}

export type Phase = "connecting" | "ready" | "in_trial" | "done";

export interface SessionEvents {
  onPhase?(phase: Phase): void;
  onFault?(code: string, message: string): void;
  onWindow?(windowId: string): void;
}

export class ClientSession {
  phase: Phase = "connecting";
  activeWindow: string | null = null;
  readonly assets = new Map<string, { kind: string; payload: Uint8Array }>();

  private queue: Promise<void> = Promise.resolve();

  constructor(
    private readonly transport: Transport,
    private readonly display: Display,
    private readonly audio: AudioOut,
    private readonly clock: MonotonicClock,
    private readonly events: SessionEvents = {},
  ) {
    transport.onMessage((text) => {
      // Frames are handled strictly in arrival order.
      this.queue = this.queue.then(() => this.handleFrame(text));
    });
    transport.onClose(() => this.setPhase("done"));
  }

  /** Send the handshake; call once the transport is open. */
  hello(): void {
    this.sendMessage({
      type: "ready",
      version: PROTOCOL_VERSION,
      audio_latency_ms: this.audio.reportedLatencyMs(),
    });
    this.setPhase("ready");
  }

  /** Forward one captured input event; dropped unless a window is open. */
  sendInput(device: "keyboard" | "button_box", code: string): void {
    if (this.activeWindow === null) return;
    this.sendMessage({ type: "input", device, code, client_ts: this.clock.nowUs() });
  }

  private sendMessage(msg: ClientMessage): void {
    this.transport.send(encodeMessage(msg));
  }

  private setPhase(phase: Phase): void {
    if (this.phase === "done") return;
    this.phase = phase;
    this.events.onPhase?.(phase);
  }

  private async handleFrame(text: string): Promise<void> {
    let msg: EngineMessage;
    try {
      msg = decodeMessage(text) as EngineMessage;
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.sendMessage({ type: "fault", code: "E_PROTO", message: err.message });
        return;
      }
      throw err;
    }
    // Any engine message closes the active response window.
    this.activeWindow = null;
    switch (msg.type) {
      case "preload": {
        const payload = payloadBytes(msg.payload);
        this.assets.set(msg.asset_id, { kind: msg.kind, payload });
        if (msg.kind === "audio") await this.audio.preload(msg.asset_id, payload);
        break;
      }
      case "present_text": {
        const onset = await this.display.showText(msg.text, msg.format);
        this.sendMessage({ type: "onset", ref: msg.id, client_ts: onset });
        this.setPhase("in_trial");
        break;
      }
      case "present_image": {
        const asset = this.assets.get(msg.asset_id);
        if (!asset) {
          this.sendMessage({ type: "fault", code: "E_ASSET", message: `unknown asset ${msg.asset_id}` });
          return;
        }
        const onset = await this.display.showImage(msg.asset_id, asset.payload);
        this.sendMessage({ type: "onset", ref: msg.id, client_ts: onset });
        this.setPhase("in_trial");
        break;
      }
      case "play": {
        if (!this.assets.has(msg.asset_id)) {
          this.sendMessage({ type: "fault", code: "E_ASSET", message: `unknown asset ${msg.asset_id}` });
          return;
        }
        const onset = await this.audio.play(msg.asset_id, msg.gain, msg.first, msg.last);
        this.sendMessage({ type: "onset", ref: msg.id, client_ts: onset });
        this.setPhase("in_trial");
        break;
      }
      case "open_window":
        this.activeWindow = msg.window_id;
        this.events.onWindow?.(msg.window_id);
        break;
      case "session_end":
        this.sendMessage({ type: "bye" });
        this.setPhase("done");
        this.transport.close();
        break;
      case "fault":
        this.events.onFault?.(msg.code, msg.message);
        this.setPhase("done");
        break;
    }
  }
}
