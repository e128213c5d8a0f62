import fs from 'fs';
import os from 'os';
import path from 'path';
import { describe, expect, it } from 'vitest';
import { SchemaError } from '../src/errors';
import { buildFigure } from '../src/figures';
import { loadSpec } from '../src/spec';

function tmpDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), 'gfig-'));
}

function writeSweepCsv(dir: string, name: string, smax: number, column = 'density'): string {
  const p = path.join(dir, name);
  fs.writeFileSync(p, [
    '# gstoch gnormal',
    `# config: {"sigma_max": ${smax}, "sigma_min": 0.8}`,
    '# seed: 0',
    `y,${column}`,
    '-1.0,0.1',
    '0.0,0.4',
    '1.0,0.1',
    '',
  ].join('\n'));
  return p;
}

function writeBundleCsv(dir: string, nPaths: number): string {
  const p = path.join(dir, 'trajectories.csv');
  const lines = [
    '# gstoch nsfde-sim',
    '# config: {"sigma_max": 1.0, "sigma_min": 0.65}',
    '# seed: 0',
    'path,t,X',
  ];
  for (let k = 0; k < nPaths; k++) {
    for (const t of [0.0, 0.5, 1.0]) lines.push(`${k},${t},${(k + t).toFixed(3)}`);
  }
  fs.writeFileSync(p, lines.join('\n') + '\n');
  return p;
}

describe('sweep figures', () => {
  it('makes one labelled curve per input with sigma values in the legend', () => {
    const dir = tmpDir();
    const inputs = [writeSweepCsv(dir, 'a.csv', 1.0), writeSweepCsv(dir, 'b.csv', 1.3)];
    const fig = buildFigure({ kind: 'density-sweep', inputs: inputs as [string, ...string[]], output: 'x.png' });
    expect(fig.series).toHaveLength(2);
    expect(fig.series[0].label).toBe('smin=0.8 smax=1');
    expect(fig.series[1].label).toBe('smin=0.8 smax=1.3');
    expect(fig.showLegend).toBe(true);
  });

  it('honors explicit labels', () => {
    const dir = tmpDir();
    const inputs = [writeSweepCsv(dir, 'a.csv', 1.0)];
    const fig = buildFigure({
      kind: 'density-sweep',
      inputs: inputs as [string, ...string[]],
      output: 'x.png',
      labels: ['custom'],
    });
    expect(fig.series[0].label).toBe('custom');
  });

  it('cdf-sweep insists on the cdf column', () => {
    const dir = tmpDir();
    const inputs = [writeSweepCsv(dir, 'a.csv', 1.0, 'density')];
    expect(() =>
      buildFigure({ kind: 'cdf-sweep', inputs: inputs as [string, ...string[]], output: 'x.png' }),
    ).toThrow('missing column "cdf"');
  });
});

describe('trajectory bundles', () => {
  it('groups rows by path id', () => {
    const dir = tmpDir();
    const fig = buildFigure({
      kind: 'trajectory-bundle',
      inputs: [writeBundleCsv(dir, 5)],
      output: 'x.png',
    });
    expect(fig.series).toHaveLength(5);
    expect(fig.series[2].x).toEqual([0.0, 0.5, 1.0]);
    expect(fig.showLegend).toBe(false);
  });

  it('rejects an empty bundle', () => {
    const dir = tmpDir();
    const fig = () =>
      buildFigure({
        kind: 'trajectory-bundle',
        inputs: [writeBundleCsv(dir, 0)],
        output: 'x.png',
      });
    expect(fig).toThrow(SchemaError);
    expect(fig).toThrow(/no data rows/);
  });

  it('takes exactly one input', () => {
    const dir = tmpDir();
    const a = writeBundleCsv(dir, 1);
    expect(() =>
      buildFigure({ kind: 'trajectory-bundle', inputs: [a, a], output: 'x.png' }),
    ).toThrow(/exactly one/);
  });
});

describe('loadSpec', () => {
  it('round-trips a valid file', () => {
    const dir = tmpDir();
    const p = path.join(dir, 'spec.json');
    fs.writeFileSync(p, JSON.stringify({
      kind: 'cdf-sweep', inputs: ['a.csv'], output: 'fig.png', width: 320, height: 240,
    }));
    const spec = loadSpec(p);
    expect(spec.kind).toBe('cdf-sweep');
    expect(spec.width).toBe(320);
  });

  it('names the offending field', () => {
    const dir = tmpDir();
    const p = path.join(dir, 'spec.json');
    fs.writeFileSync(p, JSON.stringify({ kind: 'volcano', inputs: ['a'], output: 'b' }));
    expect(() => loadSpec(p)).toThrow(/bad spec field kind/);
  });

  it('rejects mismatched label counts', () => {
    const dir = tmpDir();
    const p = path.join(dir, 'spec.json');
    fs.writeFileSync(p, JSON.stringify({
      kind: 'cdf-sweep', inputs: ['a', 'b'], output: 'c.png', labels: ['only-one'],
    }));
    expect(() => loadSpec(p)).toThrow(/labels/);
  });

  it('rejects invalid JSON', () => {
    const dir = tmpDir();
    const p = path.join(dir, 'spec.json');
    fs.writeFileSync(p, '{nope');
    expect(() => loadSpec(p)).toThrow(/not valid JSON/);
  });
});
