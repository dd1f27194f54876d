// Wire protocol: newline-delimited JSON over the plain socket, one JSON
// message per WebSocket text frame. The panel only ever sends "input"
// messages; everything else flows server -> client.

export type InputSource = 'VOICE' | 'KEYPAD' | 'PEDAL';

export interface HeaderMessage {
  type: 'header';
  version: string;
  dt_ms: number;
  telemetry_interval: number;
  ticks: number;
  seed: number;
  debounce_ms: number;
  invert_tilt: boolean;
  initial_mode: 'CONTINUOUS' | 'STEP';
  limits: {
    tilt_max: number;
    insertion_max: number;
    pan_speed_max: number;
    tilt_speed_max: number;
    insertion_speed_max: number;
  };
  steps: { angular_step: number; insertion_step: number };
  thermal: {
    charge_per_s: number;
    decay_per_s: number;
    budget: number;
    reset_fraction: number;
  };
  grammar: {
    case_insensitive: boolean;
    locale: string;
    phrases: Record<string, string>;
  };
}

export interface TelemetryMessage {
  type: 'telemetry';
  tick: number;
  pan_mdeg: number;
  tilt_mdeg: number;
  ins_um: number;
  tip_mm: [number, number, number];
  axis: [number, number, number];
  mode: 'IDLE' | 'MOVING' | 'STEPPING' | 'MANUAL' | 'FAULT';
  fault: 'THERMAL' | null;
  active: 'PAN' | 'TILT' | 'INSERTION' | null;
}

export interface EchoMessage {
  type: 'echo';
  line: string;
  token: string;
}

export interface ErrorMessage {
  type: 'error';
  code: string;
  detail: string;
}

export type ServerMessage =
  | HeaderMessage
  | TelemetryMessage
  | EchoMessage
  | ErrorMessage;

/** Exact input message bytes; key order is part of the golden transcripts. */
export function encodeInput(source: InputSource, line: string): string {
  return JSON.stringify({ type: 'input', source, line });
}

export class ProtocolError extends Error {}

export function decodeMessage(text: string): ServerMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    throw new ProtocolError(`not JSON: ${text.slice(0, 80)}`);
  }
  if (typeof obj !== 'object' || obj === null || !('type' in obj)) {
    throw new ProtocolError('message without a type');
  }
  const msg = obj as { type: string };
  switch (msg.type) {
    case 'header':
    case 'telemetry':
    case 'echo':
    case 'error':
      return msg as ServerMessage;
    default:
      throw new ProtocolError(`unknown message type ${msg.type}`);
  }
}

export function isTelemetry(msg: ServerMessage): msg is TelemetryMessage {
  return msg.type === 'telemetry';
}

export function isHeader(msg: ServerMessage): msg is HeaderMessage {
  return msg.type === 'header';
}
