// Browser entry point: wires the session client, button pad and canvases
// into the static page. Everything the panel displays originates in server
// messages; the only thing it ever sends is wire-protocol input lines.

import { buttonBindings } from './controls.js';
import { bannerModel } from './geometry.js';
import { SessionClient, type TransportFactory } from './session.js';
import { drawGauges, drawPanDial, drawSideView } from './views.js';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const websocketFactory: TransportFactory = (url, handlers) => {
  const ws = new WebSocket(url);
  ws.onopen = () => handlers.onOpen();
  ws.onmessage = (ev) => handlers.onMessage(String(ev.data));
  ws.onclose = () => handlers.onClose();
  ws.onerror = () => { /* close always follows */ };
  return { send: (text) => ws.send(text), close: () => ws.close() };
};

function main(): void {
  const params = new URLSearchParams(location.search);
  const endpoint = params.get('endpoint') ?? 'ws://127.0.0.1:8470';
  const client = new SessionClient(endpoint, websocketFactory);

  const dial = $<HTMLCanvasElement>('pan-dial').getContext('2d')!;
  const side = $<HTMLCanvasElement>('side-view').getContext('2d')!;
  const gauges = $<HTMLCanvasElement>('gauges').getContext('2d')!;
  const banner = $('banner');
  const noticeBox = $('notice');
  const statusBox = $('status');
  const pad = $('button-pad');
  const textField = $<HTMLInputElement>('voice-line');
  const sendBtn = $<HTMLButtonElement>('voice-send');
  const resetBtn = $<HTMLButtonElement>('reset-fault');

  let padBuilt = false;

  client.onChange((view) => {
    statusBox.textContent = view.status;
    statusBox.className = `status ${view.status}`;
    const connected = view.status === 'connected';
    textField.disabled = !connected;
    sendBtn.disabled = !connected;
    pad.querySelectorAll('button').forEach((b) => (b.disabled = !connected));

    if (view.header && !padBuilt) {
      padBuilt = true;
      for (const binding of buttonBindings(view.header)) {
        const button = document.createElement('button');
        button.textContent = binding.caption;
        button.title = `sends "${binding.phrase}"`;
        button.onclick = () => client.sendButton(binding.phrase);
        pad.appendChild(button);
      }
    }
    if (view.notice) {
      noticeBox.textContent = view.notice.text;
      noticeBox.className = `notice ${view.notice.kind}`;
    }
    if (view.header && view.frame) {
      drawPanDial(dial, 220, view.frame);
      drawSideView(side, 320, 260, view.header, view.frame);
      drawGauges(gauges, 340, 120, view.header, view.frame);
      const b = bannerModel(view.frame);
      banner.textContent = b.text;
      banner.className = `banner ${b.tone}`;
      resetBtn.disabled = !(b.resetEnabled && connected);
    }
  });

  sendBtn.onclick = () => {
    if (textField.value.trim()) {
      client.sendText(textField.value.trim());
      textField.value = '';
    }
  };
  textField.onkeydown = (ev) => {
    if (ev.key === 'Enter') sendBtn.click();
  };
  resetBtn.onclick = () => client.sendText('reset');

  client.connect();
}

main();
