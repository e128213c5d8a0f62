/** Figure layout: axes, gridlines, series polylines, legend, PNG output. */

import fs from 'fs';
import path from 'path';
import { buildFigure, Figure } from './figures';
import { encodePng } from './png';
import { Canvas, formatTick, niceTicks, RGBA, textWidth } from './raster';
import { FigureSpec } from './spec';

const BG: RGBA = [255, 255, 255, 255];
const AXIS: RGBA = [40, 40, 40, 255];
const GRID: RGBA = [225, 225, 225, 255];
const TEXT: RGBA = [30, 30, 30, 255];

const PALETTE: RGBA[] = [
  [31, 119, 180, 255],
  [214, 39, 40, 255],
  [44, 160, 44, 255],
  [148, 103, 189, 255],
  [255, 127, 14, 255],
  [23, 190, 207, 255],
  [140, 86, 75, 255],
  [227, 119, 194, 255],
  [127, 127, 127, 255],
  [188, 189, 34, 255],
];

const MARGIN = { left: 56, right: 14, top: 26, bottom: 40 };

function dataRange(fig: Figure): { x0: number; x1: number; y0: number; y1: number } {
  let x0 = Infinity, x1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const s of fig.series) {
    for (const v of s.x) {
      if (v < x0) x0 = v;
      if (v > x1) x1 = v;
    }
    for (const v of s.y) {
      if (v < y0) y0 = v;
      if (v > y1) y1 = v;
    }
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const padY = (y1 - y0) * 0.05;
  return { x0, x1, y0: y0 - padY, y1: y1 + padY };
}

export function drawFigure(fig: Figure, width = 720, height = 480): Canvas {
  const cv = new Canvas(width, height, BG);
  const box = {
    x: MARGIN.left,
    y: MARGIN.top,
    w: width - MARGIN.left - MARGIN.right,
    h: height - MARGIN.top - MARGIN.bottom,
  };
  const r = dataRange(fig);
  const px = (v: number) => box.x + ((v - r.x0) / (r.x1 - r.x0)) * box.w;
  const py = (v: number) => box.y + box.h - ((v - r.y0) / (r.y1 - r.y0)) * box.h;

  for (const tx of niceTicks(r.x0, r.x1)) {
    const gx = Math.round(px(tx));
    cv.line(gx, box.y, gx, box.y + box.h, GRID);
    const label = formatTick(tx);
    cv.text(gx - Math.floor(textWidth(label) / 2), box.y + box.h + 6, label, TEXT);
  }
  for (const ty of niceTicks(r.y0, r.y1)) {
    const gy = Math.round(py(ty));
    cv.line(box.x, gy, box.x + box.w, gy, GRID);
    const label = formatTick(ty);
    cv.text(box.x - textWidth(label) - 6, gy - 3, label, TEXT);
  }

  cv.line(box.x, box.y, box.x, box.y + box.h, AXIS);
  cv.line(box.x, box.y + box.h, box.x + box.w, box.y + box.h, AXIS);

  fig.series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    for (let k = 1; k < s.x.length; k++) {
      cv.line(px(s.x[k - 1]), py(s.y[k - 1]), px(s.x[k]), py(s.y[k]), color);
    }
  });

  cv.text(box.x + Math.floor((box.w - textWidth(fig.title)) / 2), 8, fig.title, TEXT);
  cv.text(box.x + box.w - textWidth(fig.xLabel), box.y + box.h + 20, fig.xLabel, TEXT);
  cv.text(4, box.y - 10, fig.yLabel, TEXT);

  if (fig.showLegend) {
    const entryH = 12;
    const wMax = Math.max(...fig.series.map((s) => textWidth(s.label)));
    const lx = box.x + box.w - wMax - 30;
    let ly = box.y + 8;
    fig.series.forEach((s, idx) => {
      const color = PALETTE[idx % PALETTE.length];
      cv.fillRect(lx, ly + 1, 12, 5, color);
      cv.text(lx + 16, ly, s.label, TEXT);
      ly += entryH;
    });
  }
  return cv;
}

export interface RenderResult {
  output: string;
  seriesCount: number;
}

export function render(spec: FigureSpec): RenderResult {
  const fig = buildFigure(spec);
  const cv = drawFigure(fig, spec.width ?? 720, spec.height ?? 480);
  const png = encodePng(cv.width, cv.height, cv.data);
  fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
  fs.writeFileSync(spec.output, png);
  return { output: spec.output, seriesCount: fig.series.length };
}
