/**
 * Turns spec + CSV tables into an abstract figure: titled, labelled series.
 *
 * Sweep figures take one CSV per curve and label each curve with the sigma
 * band echoed in that file's config header. Trajectory bundles take a single
 * CSV whose rows are grouped by the path id column.
 */

import { numericColumn, readTable, Table } from './csv';
import { SchemaError } from './errors';
import { FigureSpec } from './spec';

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export interface Figure {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  showLegend: boolean;
}

function sigmaLabel(t: Table): string {
  const lo = t.config['sigma_min'];
  const hi = t.config['sigma_max'];
  if (lo === undefined || hi === undefined) return t.path;
  return `smin=${lo} smax=${hi}`;
}

function buildSweep(spec: FigureSpec, valueColumn: string): Figure {
  const series = spec.inputs.map((p, i) => {
    const t = readTable(p);
    const x = numericColumn(t, 'y');
    const y = numericColumn(t, valueColumn);
    if (x.length === 0) throw new SchemaError(`no data rows in ${p}`);
    return { label: spec.labels?.[i] ?? sigmaLabel(t), x, y };
  });
  return {
    title: spec.title ?? `worst-case ${valueColumn} sweep`,
    xLabel: 'y',
    yLabel: valueColumn,
    series,
    showLegend: true,
  };
}

function buildBundle(spec: FigureSpec): Figure {
  if (spec.inputs.length !== 1) {
    throw new SchemaError('trajectory-bundle takes exactly one input CSV');
  }
  const t = readTable(spec.inputs[0]);
  const ids = numericColumn(t, 'path');
  const ts = numericColumn(t, 't');
  const xs = numericColumn(t, 'X');
  if (ids.length === 0) throw new SchemaError(`no data rows in ${t.path}`);

  const order: number[] = [];
  const groups = new Map<number, Series>();
  for (let k = 0; k < ids.length; k++) {
    let s = groups.get(ids[k]);
    if (!s) {
      s = { label: `path ${ids[k]}`, x: [], y: [] };
      groups.set(ids[k], s);
      order.push(ids[k]);
    }
    s.x.push(ts[k]);
    s.y.push(xs[k]);
  }
  const band = sigmaLabel(t);
  return {
    title: spec.title ?? `trajectories (${band})`,
    xLabel: 't',
    yLabel: 'X',
    series: order.map((id) => groups.get(id)!),
    showLegend: false, // twenty per-path entries would swamp the plot
  };
}

export function buildFigure(spec: FigureSpec): Figure {
  if (spec.kind === 'density-sweep') return buildSweep(spec, 'density');
  if (spec.kind === 'cdf-sweep') return buildSweep(spec, 'cdf');
  return buildBundle(spec);
}
