/**
 * Physical-key mapping table, versioned so scripts name keys consistently
 * across platforms.  Keys are KeyboardEvent.code values (physical positions,
 * US reference layout); values are the engine's key-code names.
 *
 * Main-area character keys map to CK_* names, special and numeric-keypad
 * keys to VK_* names.  Gamepad buttons are reported separately as BK_01...
 * BK_08 by the input capture layer.
 */

export const KEYMAP_VERSION = "1.0";

const letters: Record<string, string> = {};
for (const ch of "ABCDEFGHIJKLMNOPQRSTUVWXYZ") {
  letters[`Key${ch}`] = `CK_${ch}`;
}

const digits: Record<string, string> = {};
for (let d = 0; d <= 9; d++) {
  digits[`Digit${d}`] = `CK_${d}`;
  digits[`Numpad${d}`] = `VK_NUMPAD${d}`;
}

const functionKeys: Record<string, string> = {};
for (let f = 1; f <= 12; f++) {
  functionKeys[`F${f}`] = `VK_F${f}`;
}

export const KEYMAP: Readonly<Record<string, string>> = Object.freeze({
  ...letters,
  ...digits,
  ...functionKeys,
  Space: "VK_SPACE",
  Enter: "VK_RETURN",
  NumpadEnter: "VK_RETURN",
  Escape: "VK_ESCAPE",
  Tab: "VK_TAB",
  Backspace: "VK_BACK",
  ArrowLeft: "VK_LEFT",
  ArrowRight: "VK_RIGHT",
  ArrowUp: "VK_UP",
  ArrowDown: "VK_DOWN",
  ShiftLeft: "VK_SHIFT",
  ShiftRight: "VK_SHIFT",
  ControlLeft: "VK_CONTROL",
  ControlRight: "VK_CONTROL",
  NumpadAdd: "VK_ADD",
  NumpadSubtract: "VK_SUBTRACT",
  NumpadMultiply: "VK_MULTIPLY",
  NumpadDivide: "VK_DIVIDE",
  NumpadDecimal: "VK_DECIMAL",
});

/** Engine key-code name for a physical key, or null when unmapped. */
export function codeNameFor(physicalCode: string): string | null {
  return KEYMAP[physicalCode] ?? null;
}

/** Gamepad buttons are the button box: index 0 -> BK_01. */
export function buttonName(index: number): string {
  return `BK_${String(index + 1).padStart(2, "0")}`;
}
