// Loads the recorded session fixture produced by the simulator CLI
// (test/fixtures/session.scenario -> session.log).

import { readFileSync } from 'node:fs';
import { decodeMessage, isHeader, isTelemetry } from '../src/protocol.js';
import type { HeaderMessage, TelemetryMessage } from '../src/protocol.js';

const LOG_URL = new URL('./fixtures/session.log', import.meta.url);

export interface SessionFixture {
  lines: string[];
  header: HeaderMessage;
  frames: TelemetryMessage[];
}

export function loadFixture(): SessionFixture {
  const lines = readFileSync(LOG_URL, 'utf-8').split('\n').filter((l) => l.trim());
  const messages = lines
    .map((l) => JSON.parse(l))
    .filter((m) => m.type === 'header' || m.type === 'telemetry')
    .map((m) => decodeMessage(JSON.stringify(m)));
  const header = messages.find(isHeader);
  if (!header) throw new Error('fixture has no header');
  return { lines, header, frames: messages.filter(isTelemetry) };
}
