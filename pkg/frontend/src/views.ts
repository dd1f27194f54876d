// Canvas drawing for the three schematic panels. All geometry comes from
// geometry.ts; this file only pushes pixels, so it stays out of the tests.

import { gaugeModels, panNeedleAngle, sideViewModel } from './geometry.js';
import type { HeaderMessage, TelemetryMessage } from './protocol.js';

const GUIDE = '#888';
const SCOPE = '#0a6cc8';
const LIMIT = '#c0392b';
const OK = '#2c9a4b';

export function drawPanDial(
  ctx: CanvasRenderingContext2D,
  size: number,
  frame: TelemetryMessage,
): void {
  ctx.clearRect(0, 0, size, size);
  const cx = size / 2;
  const cy = size / 2;
  const r = size * 0.4;
  ctx.strokeStyle = GUIDE;
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.arc(cx, cy, r, 0, 2 * Math.PI);
  ctx.stroke();
  for (let deg = 0; deg < 360; deg += 45) {
    const a = (deg * Math.PI) / 180;
    ctx.beginPath();
    ctx.moveTo(cx + 0.92 * r * Math.sin(a), cy - 0.92 * r * Math.cos(a));
    ctx.lineTo(cx + r * Math.sin(a), cy - r * Math.cos(a));
    ctx.stroke();
  }
  const needle = panNeedleAngle(frame);
  ctx.strokeStyle = SCOPE;
  ctx.lineWidth = 2.5;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx + r * Math.sin(needle), cy - r * Math.cos(needle));
  ctx.stroke();
  ctx.fillStyle = '#333';
  ctx.font = '12px sans-serif';
  ctx.fillText(`pan ${(frame.pan_mdeg / 1000).toFixed(2)}°`, 8, size - 8);
}

export function drawSideView(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  header: HeaderMessage,
  frame: TelemetryMessage,
): void {
  ctx.clearRect(0, 0, width, height);
  const model = sideViewModel(header, frame);
  const originX = width / 2;
  const originY = 18;
  const scale = (height - 40) / model.reachRadiusMm;

  // abdominal wall line through the pivot
  ctx.strokeStyle = GUIDE;
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(8, originY);
  ctx.lineTo(width - 8, originY);
  ctx.stroke();

  // static guides from the header: tilt cone and full-travel arc
  const r = model.reachRadiusMm * scale;
  ctx.strokeStyle = LIMIT;
  ctx.setLineDash([5, 4]);
  for (const sign of [-1, 1]) {
    ctx.beginPath();
    ctx.moveTo(originX, originY);
    ctx.lineTo(
      originX + sign * r * Math.sin(model.coneHalfAngleRad),
      originY + r * Math.cos(model.coneHalfAngleRad),
    );
    ctx.stroke();
  }
  ctx.beginPath();
  ctx.arc(originX, originY, r, Math.PI / 2 - model.coneHalfAngleRad,
          Math.PI / 2 + model.coneHalfAngleRad);
  ctx.stroke();
  ctx.setLineDash([]);

  // the scope itself at the current tilt/insertion (pan collapses in section)
  ctx.strokeStyle = model.scopeOnConeGuide ? LIMIT : SCOPE;
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(originX, originY);
  ctx.lineTo(
    originX + model.scopeLengthMm * scale * Math.sin(model.scopeAngleRad),
    originY + model.scopeLengthMm * scale * Math.cos(model.scopeAngleRad),
  );
  ctx.stroke();
  ctx.fillStyle = '#333';
  ctx.font = '12px sans-serif';
  ctx.fillText(
    `tilt ${(frame.tilt_mdeg / 1000).toFixed(2)}°  insertion ${(frame.ins_um / 1000).toFixed(1)} mm`,
    8, height - 8,
  );
}

export function drawGauges(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  header: HeaderMessage,
  frame: TelemetryMessage,
): void {
  ctx.clearRect(0, 0, width, height);
  const gauges = gaugeModels(header, frame);
  const rowH = height / gauges.length;
  gauges.forEach((g, i) => {
    const y = i * rowH + 6;
    const barY = y + 14;
    const barW = width - 90;
    ctx.fillStyle = '#333';
    ctx.font = '12px sans-serif';
    ctx.fillText(g.label, 8, y + 10);
    ctx.strokeStyle = GUIDE;
    ctx.strokeRect(8, barY, barW, 12);
    ctx.fillStyle = g.pinned ? LIMIT : OK;
    ctx.fillRect(8, barY, barW * g.fraction, 12);
    // limit marker sits exactly at the header's maximum
    ctx.strokeStyle = LIMIT;
    ctx.beginPath();
    ctx.moveTo(8 + barW, barY - 3);
    ctx.lineTo(8 + barW, barY + 15);
    ctx.stroke();
    ctx.fillStyle = '#333';
    ctx.fillText(g.markerText, 14 + barW, barY + 11);
  });
}
