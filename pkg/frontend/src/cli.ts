#!/usr/bin/env node
/**
 * Usage: gstoch-figures render <spec.json> [more specs...]
 * Exit codes: 0 ok, 2 bad spec or CSV schema, 1 anything else.
 */

import { SchemaError } from './errors';
import { render } from './render';
import { loadSpec } from './spec';

export function main(argv: string[]): number {
  if (argv.length < 2 || argv[0] !== 'render') {
    console.error('usage: gstoch-figures render <spec.json> [more specs...]');
    return 2;
  }
  try {
    for (const specPath of argv.slice(1)) {
      const res = render(loadSpec(specPath));
      console.log(`${res.output} (${res.seriesCount} series)`);
    }
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`error: ${e.message}`);
      return 2;
    }
    console.error(`error: ${e instanceof Error ? e.message : e}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
