// Pure view math shared by the canvas panels and the tests. Every guide and
// marker is derived from the session header, never hard-coded, so the
// drawings always match the limits the server is actually enforcing.

import type { HeaderMessage, TelemetryMessage } from './protocol.js';

export interface GaugeModel {
  label: string;
  value: number;
  max: number;
  fraction: number; // value / max, clamped to [0, 1]
  markerText: string;
  pinned: boolean; // exactly at the limit marker
}

const clamp01 = (x: number) => Math.min(1, Math.max(0, x));

export function gaugeModels(header: HeaderMessage, frame: TelemetryMessage): GaugeModel[] {
  const tiltMax = header.limits.tilt_max;
  const insMax = header.limits.insertion_max;
  return [
    {
      label: 'pan',
      value: frame.pan_mdeg,
      max: 360_000,
      fraction: clamp01(frame.pan_mdeg / 360_000),
      markerText: '360.0°',
      pinned: false, // pan wraps; it has no end stop
    },
    {
      label: 'tilt',
      value: frame.tilt_mdeg,
      max: tiltMax,
      fraction: clamp01(frame.tilt_mdeg / tiltMax),
      markerText: `${(tiltMax / 1000).toFixed(1)}°`,
      pinned: frame.tilt_mdeg === tiltMax,
    },
    {
      label: 'insertion',
      value: frame.ins_um,
      max: insMax,
      fraction: clamp01(frame.ins_um / insMax),
      markerText: `${(insMax / 1000).toFixed(0)} mm`,
      pinned: frame.ins_um === insMax,
    },
  ];
}

/** Needle angle on the top-down dial, radians clockwise from screen-up. */
export function panNeedleAngle(frame: TelemetryMessage): number {
  return (frame.pan_mdeg / 1000) * (Math.PI / 180);
}

export interface SideViewModel {
  coneHalfAngleRad: number; // static guide from header tilt_max
  reachRadiusMm: number; // static guide from header insertion_max
  scopeAngleRad: number; // current tilt
  scopeLengthMm: number; // current insertion
  scopeOnConeGuide: boolean; // needle exactly on the cone boundary
}

export function sideViewModel(header: HeaderMessage, frame: TelemetryMessage): SideViewModel {
  const coneHalfAngleRad = (header.limits.tilt_max / 1000) * (Math.PI / 180);
  const scopeAngleRad = (frame.tilt_mdeg / 1000) * (Math.PI / 180);
  return {
    coneHalfAngleRad,
    reachRadiusMm: header.limits.insertion_max / 1000,
    scopeAngleRad,
    scopeLengthMm: frame.ins_um / 1000,
    scopeOnConeGuide: frame.tilt_mdeg === header.limits.tilt_max,
  };
}

export interface BannerModel {
  text: string;
  tone: 'ok' | 'info' | 'fault';
  resetEnabled: boolean;
}

export function bannerModel(frame: TelemetryMessage): BannerModel {
  if (frame.mode === 'FAULT') {
    return {
      text: `FAULT: ${frame.fault ?? 'unknown'}, motors cut; reset after cooldown`,
      tone: 'fault',
      resetEnabled: true,
    };
  }
  if (frame.mode === 'MANUAL') {
    return { text: 'MANUAL: motors off, move by hand', tone: 'info', resetEnabled: false };
  }
  const active = frame.active ? ` (${frame.active.toLowerCase()})` : '';
  return { text: `${frame.mode}${active}`, tone: 'ok', resetEnabled: false };
}
