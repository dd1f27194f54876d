// Button pad bindings generated from the grammar the server sent in its
// header, so every control speaks a phrase the server is guaranteed to
// parse (single source of truth; nothing hard-coded client side).

import type { HeaderMessage } from './protocol.js';

export interface ButtonBinding {
  token: string;
  phrase: string;
  caption: string;
}

const CAPTIONS: Record<string, string> = {
  LEFT: '◀',
  RIGHT: '▶',
  UP: '▲',
  DOWN: '▼',
  IN: 'zoom +',
  OUT: 'zoom −',
  STOP: 'STOP',
  STEP_MODE: 'step',
  CONTINUOUS_MODE: 'continuous',
  MANUAL_ON: 'clutch on',
  MANUAL_OFF: 'clutch off',
  RESET: 'reset fault',
};

export const BUTTON_ORDER = [
  'UP', 'LEFT', 'STOP', 'RIGHT', 'DOWN', 'IN', 'OUT',
  'STEP_MODE', 'CONTINUOUS_MODE', 'MANUAL_ON', 'MANUAL_OFF', 'RESET',
] as const;

/** A phrase spelling the token's own name wins; otherwise the shortest
 * phrase, ties broken alphabetically. Deterministic for any grammar, and
 * short phrases suit button payloads. */
export function phraseFor(header: HeaderMessage, token: string): string | undefined {
  const candidates = Object.entries(header.grammar.phrases)
    .filter(([, t]) => t === token)
    .map(([phrase]) => phrase)
    .sort((a, b) => a.length - b.length || (a < b ? -1 : 1));
  const literal = candidates.find((p) => p === token.toLowerCase());
  return literal ?? candidates[0];
}

export function buttonBindings(header: HeaderMessage): ButtonBinding[] {
  const bindings: ButtonBinding[] = [];
  for (const token of BUTTON_ORDER) {
    const phrase = phraseFor(header, token);
    if (phrase !== undefined) {
      bindings.push({ token, phrase, caption: CAPTIONS[token] ?? token });
    }
  }
  return bindings;
}
