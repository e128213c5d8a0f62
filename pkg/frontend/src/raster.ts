/** Tiny software canvas: RGBA buffer, clipped lines, bitmap text, ticks. */

import { FONT, GLYPH_H, GLYPH_W, MISSING } from './font';

export type RGBA = [number, number, number, number];

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8ClampedArray;

  constructor(width: number, height: number, background: RGBA = [255, 255, 255, 255]) {
    this.width = width;
    this.height = height;
    this.data = new Uint8ClampedArray(width * height * 4);
    for (let i = 0; i < width * height; i++) {
      this.data.set(background, i * 4);
    }
  }

  set(x: number, y: number, c: RGBA): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    this.data.set(c, (y * this.width + x) * 4);
  }

  /** Bresenham segment on rounded endpoints; silently clips at the edges. */
  line(x0: number, y0: number, x1: number, y1: number, c: RGBA): void {
    let ax = Math.round(x0);
    let ay = Math.round(y0);
    const bx = Math.round(x1);
    const by = Math.round(y1);
    const dx = Math.abs(bx - ax);
    const dy = -Math.abs(by - ay);
    const sx = ax < bx ? 1 : -1;
    const sy = ay < by ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.set(ax, ay, c);
      if (ax === bx && ay === by) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ax += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ay += sy;
      }
    }
  }

  fillRect(x: number, y: number, w: number, h: number, c: RGBA): void {
    for (let j = y; j < y + h; j++) {
      for (let i = x; i < x + w; i++) this.set(i, j, c);
    }
  }

  /** 5x7 bitmap text, top-left anchored, 1px letter spacing. */
  text(x: number, y: number, s: string, c: RGBA): void {
    let cx = x;
    for (const ch of s) {
      const glyph = FONT[ch] ?? MISSING;
      for (let col = 0; col < GLYPH_W; col++) {
        const bits = glyph[col];
        for (let row = 0; row < GLYPH_H; row++) {
          if (bits & (1 << row)) this.set(cx + col, y + row, c);
        }
      }
      cx += GLYPH_W + 1;
    }
  }
}

export function textWidth(s: string): number {
  return s.length === 0 ? 0 : s.length * (GLYPH_W + 1) - 1;
}

/** Round tick steps to 1/2/5 times a power of ten. */
export function niceTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const raw = span / Math.max(target - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function formatTick(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.001) return v.toExponential(1);
  return parseFloat(v.toPrecision(4)).toString();
}
