/** Figure description files: same JSON style as the gstoch CLI configs. */

import fs from 'fs';
import { z } from 'zod';
import { SchemaError } from './errors';

export const figureSpecSchema = z.object({
  kind: z.enum(['density-sweep', 'cdf-sweep', 'trajectory-bundle']),
  inputs: z.array(z.string()).nonempty(),
  output: z.string(),
  title: z.string().optional(),
  labels: z.array(z.string()).optional(),
  width: z.number().int().min(160).max(4096).optional(),
  height: z.number().int().min(120).max(4096).optional(),
});

export type FigureSpec = z.infer<typeof figureSpecSchema>;

export function loadSpec(path: string): FigureSpec {
  if (!fs.existsSync(path)) {
    throw new SchemaError(`spec file does not exist: ${path}`);
  }
  let raw: unknown;
  try {
    raw = JSON.parse(fs.readFileSync(path, 'utf8'));
  } catch (e) {
    throw new SchemaError(`spec file is not valid JSON: ${path}`);
  }
  const res = figureSpecSchema.safeParse(raw);
  if (!res.success) {
    const issue = res.error.issues[0];
    throw new SchemaError(`bad spec field ${issue.path.join('.') || '(root)'}: ${issue.message}`);
  }
  const spec = res.data;
  if (spec.labels && spec.labels.length !== spec.inputs.length) {
    throw new SchemaError('bad spec field labels: must match inputs length');
  }
  return spec;
}
