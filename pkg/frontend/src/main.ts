/** Entry point: connect to the engine and run the subject-facing screen. */

import { WebAudioOut } from "./audio.js";
import { ClientSession } from "./client.js";
import { DomDisplay, PerformanceClock, WebSocketTransport, captureInput } from "./dom.js";
import { KEYMAP_VERSION } from "./keymap.js";

function statusLine(text: string): void {
  const el = document.getElementById("status");
  if (el) el.textContent = text;
}

async function start(): Promise<void> {
  const uriInput = document.getElementById("endpoint") as HTMLInputElement;
  const stage = document.getElementById("stage") as HTMLElement;
  const clock = new PerformanceClock();
  const audio = new WebAudioOut(new AudioContext(), clock);

  let transport: WebSocketTransport;
  try {
    transport = await WebSocketTransport.open(uriInput.value);
  } catch (err) {
    statusLine(String(err));
    return;
  }

  const session = new ClientSession(transport, new DomDisplay(stage, clock), audio, clock, {
    onPhase: (phase) => statusLine(`session: ${phase}`),
    onFault: (code, message) => statusLine(`engine fault ${code}: ${message}`),
  });
  captureInput(session);
  session.hello();
}

document.getElementById("connect")?.addEventListener("click", () => void start());
document.getElementById("fullscreen")?.addEventListener("click", () => {
  void document.getElementById("stage")?.requestFullscreen();
});
statusLine(`disconnected (keymap v${KEYMAP_VERSION})`);
