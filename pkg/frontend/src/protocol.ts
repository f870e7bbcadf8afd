/**
 * Wire protocol shared with the engine: one JSON object per WebSocket frame.
 *
 * engine -> client: preload, present_text, present_image, play, open_window,
 *                   session_end, fault
 * client -> engine: ready, onset, input, fault, bye
 *
 * Every present/play is answered by exactly one onset echoing its id.  Any
 * engine message implicitly closes the client's active response window.
 * All client_ts values are microseconds on one monotonic client clock.
 */

export const PROTOCOL_VERSION = 1;

export interface TextStyle {
  font: string;
  size: number;
  bkcolor: [number, number, number];
  txtcolor: [number, number, number];
  position: string[];
}

export type EngineMessage =
  | { type: "preload"; asset_id: string; kind: "audio" | "image" | "text"; payload: string }
  | { type: "present_text"; id: number; text: string; format: TextStyle }
  | { type: "present_image"; id: number; asset_id: string }
  | { type: "play"; id: number; asset_id: string; gain: number; first: number; last: number }
  | { type: "open_window"; window_id: string }
  | { type: "session_end" }
  | { type: "fault"; code: string; message: string };

export type ClientMessage =
  | { type: "ready"; version: number; audio_latency_ms: number | null }
  | { type: "onset"; ref: number; client_ts: number }
  | { type: "input"; device: "keyboard" | "button_box"; code: string; client_ts: number }
  | { type: "fault"; code: string; message: string }
  | { type: "bye" };

export type WireMessage = EngineMessage | ClientMessage;

const MESSAGE_TYPES = new Set([
  "preload",
  "present_text",
  "present_image",
  "play",
  "open_window",
  "session_end",
  "fault",
  "ready",
  "onset",
  "input",
  "bye",
]);

export class ProtocolError extends Error {
  readonly code = "E_PROTO";
}

export function encodeMessage(msg: WireMessage): string {
  return JSON.stringify(msg);
}

export function decodeMessage(data: string): WireMessage {
  if (!data) throw new ProtocolError("empty frame");
  let body: unknown;
  try {
    body = JSON.parse(data);
  } catch {
    throw new ProtocolError("frame is not valid JSON");
  }
  if (typeof body !== "object" || body === null || Array.isArray(body)) {
    throw new ProtocolError("frame is not an object");
  }
  const type = (body as { type?: unknown }).type;
  if (typeof type !== "string" || !MESSAGE_TYPES.has(type)) {
    throw new ProtocolError(`unknown message type ${String(type)}`);
  }
  return body as WireMessage;
}

/** Base64 payload decoding that works in browsers and node. */
export function payloadBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const binary = atob(b64);
    const bytes = new Uint8Array(binary.length);
    for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
    return bytes;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
}
