/**
 * Reader for the CSV files the gstoch CLI emits.
 *
 * Every file starts with three comment lines:
 *   # gstoch <command>
 *   # config: {...json...}
 *   # seed: <n>
 * followed by a regular header row and numeric data.
 */

import fs from 'fs';
import Papa from 'papaparse';
import { SchemaError } from './errors';

export interface Table {
  path: string;
  command: string;
  config: Record<string, unknown>;
  seed: number;
  columns: string[];
  rows: Record<string, number | string>[];
}

export function readTable(path: string): Table {
  if (!fs.existsSync(path)) {
    throw new SchemaError(`input CSV does not exist: ${path}`);
  }
  // the emitter mixes \n comment lines with \r\n csv rows; normalize so the
  // parser's newline autodetection cannot fold the header into a comment
  const text = fs.readFileSync(path, 'utf8').replace(/\r\n/g, '\n');

  let command = '';
  let config: Record<string, unknown> = {};
  let seed = 0;
  for (const line of text.split('\n')) {
    if (!line.startsWith('#')) break;
    const body = line.slice(1).trim();
    if (body.startsWith('gstoch ')) command = body.slice('gstoch '.length);
    else if (body.startsWith('config: ')) {
      try {
        config = JSON.parse(body.slice('config: '.length));
      } catch {
        throw new SchemaError(`unparseable config header in ${path}`);
      }
    } else if (body.startsWith('seed: ')) seed = Number(body.slice('seed: '.length));
  }

  const parsed = Papa.parse<Record<string, number | string>>(text, {
    comments: '#',
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`cannot parse ${path}: ${e.message} (row ${e.row})`);
  }
  const columns = parsed.meta.fields ?? [];
  return { path, command, config, seed, columns, rows: parsed.data };
}

/** Pulls one numeric column, failing loudly if it is absent. */
export function numericColumn(table: Table, name: string): number[] {
  if (!table.columns.includes(name)) {
    throw new SchemaError(`missing column "${name}" in ${table.path}`);
  }
  return table.rows.map((r) => {
    const v = Number(r[name]);
    if (!Number.isFinite(v)) {
      throw new SchemaError(`non-numeric value in column "${name}" of ${table.path}`);
    }
    return v;
  });
}
