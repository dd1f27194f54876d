// Connection state machine for one panel. The transport is injected so the
// whole thing runs under vitest with a scripted fake; the browser entry
// point passes a thin WebSocket adapter.
//
// Rendered joints always come from the last received frame: this client
// stores frames verbatim and never extrapolates between them.

import {
  decodeMessage,
  encodeInput,
  type HeaderMessage,
  type InputSource,
  type ServerMessage,
  type TelemetryMessage,
} from './protocol.js';

export interface Transport {
  send(text: string): void;
  close(): void;
}

export interface TransportHandlers {
  onOpen(): void;
  onMessage(text: string): void;
  onClose(): void;
}

export type TransportFactory = (url: string, handlers: TransportHandlers) => Transport;

export type ConnectionStatus = 'connecting' | 'connected' | 'disconnected';

export interface Notice {
  kind: 'echo' | 'error';
  text: string;
}

export interface SessionView {
  status: ConnectionStatus;
  header: HeaderMessage | null;
  frame: TelemetryMessage | null;
  notice: Notice | null;
}

export interface SessionClientOptions {
  reconnectDelayMs?: number;
  /** setTimeout stand-in, injectable for tests. */
  schedule?: (fn: () => void, ms: number) => void;
}

export class SessionClient {
  private transport: Transport | null = null;
  private view: SessionView = { status: 'connecting', header: null, frame: null, notice: null };
  private listeners: Array<(view: SessionView) => void> = [];
  private stopped = false;
  private readonly reconnectDelayMs: number;
  private readonly schedule: (fn: () => void, ms: number) => void;

  constructor(
    private readonly url: string,
    private readonly factory: TransportFactory,
    options: SessionClientOptions = {},
  ) {
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
  }

  get state(): SessionView {
    return this.view;
  }

  onChange(listener: (view: SessionView) => void): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<SessionView>): void {
    this.view = { ...this.view, ...patch };
    for (const listener of this.listeners) {
      listener(this.view);
    }
  }

  connect(): void {
    this.stopped = false;
    this.update({ status: 'connecting' });
    this.transport = this.factory(this.url, {
      onOpen: () => this.update({ status: 'connected' }),
      onMessage: (text) => this.handleMessage(text),
      onClose: () => {
        this.transport = null;
        this.update({ status: 'disconnected' });
        if (!this.stopped) {
          this.schedule(() => {
            if (!this.stopped) {
              this.connect();
            }
          }, this.reconnectDelayMs);
        }
      },
    });
  }

  disconnect(): void {
    this.stopped = true;
    this.transport?.close();
    this.transport = null;
    this.update({ status: 'disconnected' });
  }

  private handleMessage(text: string): void {
    let msg: ServerMessage;
    try {
      msg = decodeMessage(text);
    } catch {
      this.update({ notice: { kind: 'error', text: `unreadable message` } });
      return;
    }
    switch (msg.type) {
      case 'header':
        this.update({ header: msg });
        break;
      case 'telemetry':
        this.update({ frame: msg });
        break;
      case 'echo':
        this.update({ notice: { kind: 'echo', text: `heard "${msg.line}" → ${msg.token}` } });
        break;
      case 'error':
        this.update({ notice: { kind: 'error', text: `${msg.code}: ${msg.detail}` } });
        break;
    }
  }

  /** Free text goes out tagged VOICE (the recognizer stand-in). */
  sendText(line: string): boolean {
    return this.sendInput('VOICE', line);
  }

  /** Button presses go out tagged KEYPAD. */
  sendButton(phrase: string): boolean {
    return this.sendInput('KEYPAD', phrase);
  }

  sendInput(source: InputSource, line: string): boolean {
    if (this.view.status !== 'connected' || this.transport === null) {
      return false;
    }
    this.transport.send(encodeInput(source, line));
    return true;
  }
}
