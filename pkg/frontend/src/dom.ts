/**
 * Browser adapters: full-screen stimulus area, keyboard/gamepad capture and
 * the performance-clock.  Display onsets are stamped in the frame callback
 * after the change is committed, keyboard events at their handler.
 */

import { ClientSession, Display, MonotonicClock, Transport } from "./client.js";
import { buttonName, codeNameFor } from "./keymap.js";
import { TextStyle } from "./protocol.js";

export class PerformanceClock implements MonotonicClock {
  nowUs(): number {
    return Math.round(performance.now() * 1000);
  }
}

export class WebSocketTransport implements Transport {
  private messageHandler: ((text: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  constructor(private readonly socket: WebSocket) {
    socket.onmessage = (event) => this.messageHandler?.(String(event.data));
    socket.onclose = () => this.closeHandler?.();
  }

  static open(uri: string): Promise<WebSocketTransport> {
    return new Promise((resolve, reject) => {
      const socket = new WebSocket(uri);
      socket.onopen = () => resolve(new WebSocketTransport(socket));
      socket.onerror = () => reject(new Error(`cannot connect to ${uri}`));
    });
  }

  send(text: string): void {
    this.socket.send(text);
  }

  onMessage(handler: (text: string) => void): void {
    this.messageHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.socket.close();
  }
}

function cssColor([r, g, b]: [number, number, number]): string {
  return `rgb(${r}, ${g}, ${b})`;
}

export class DomDisplay implements Display {
  private imageUrl: string | null = null;

  constructor(
    private readonly stage: HTMLElement,
    private readonly clock: MonotonicClock,
  ) {}

  private afterPaint(): Promise<number> {
    return new Promise((resolve) =>
      requestAnimationFrame(() => resolve(this.clock.nowUs())),
    );
  }

  private clear(): void {
    if (this.imageUrl) {
      URL.revokeObjectURL(this.imageUrl);
      this.imageUrl = null;
    }
    this.stage.replaceChildren();
  }

  showText(text: string, format: TextStyle): Promise<number> {
    this.clear();
    this.stage.style.backgroundColor = cssColor(format.bkcolor);
    const label = document.createElement("div");
    label.textContent = text;
    label.style.color = cssColor(format.txtcolor);
    label.style.font = `${format.size}pt ${format.font}`;
    label.style.whiteSpace = "pre-wrap";
    this.stage.style.justifyContent = format.position.includes("Left")
      ? "flex-start"
      : format.position.includes("Right")
        ? "flex-end"
        : "center";
    this.stage.style.alignItems = format.position.includes("Top")
      ? "flex-start"
      : format.position.includes("Bottom")
        ? "flex-end"
        : "center";
    this.stage.appendChild(label);
    return this.afterPaint();
  }

  showImage(assetId: string, payload: Uint8Array): Promise<number> {
    this.clear();
    const blob = new Blob([payload as BlobPart]);
    this.imageUrl = URL.createObjectURL(blob);
    const img = document.createElement("img");
    img.src = this.imageUrl;
    this.stage.appendChild(img);
    return this.afterPaint();
  }
}

/** Keyboard and gamepad capture; unmapped keys are forwarded by name only when mapped, the engine filters the rest. */
export function captureInput(session: ClientSession): () => void {
  const onKey = (event: KeyboardEvent) => {
    if (event.repeat) return;
    const name = codeNameFor(event.code);
    if (name) session.sendInput("keyboard", name);
  };
  window.addEventListener("keydown", onKey);

  const pressed = new Set<string>();
  const poll = window.setInterval(() => {
    for (const pad of navigator.getGamepads?.() ?? []) {
      if (!pad) continue;
      pad.buttons.forEach((button, index) => {
        const key = `${pad.index}:${index}`;
        if (button.pressed && !pressed.has(key)) {
          pressed.add(key);
          session.sendInput("button_box", buttonName(index));
        } else if (!button.pressed) {
          pressed.delete(key);
        }
      });
    }
  }, 8);

  return () => {
    window.removeEventListener("keydown", onKey);
    window.clearInterval(poll);
  };
}
