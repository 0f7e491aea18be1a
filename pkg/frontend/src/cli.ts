#!/usr/bin/env node
/**
 * Batch figure rendering for fnls result bundles.
 *
 *   fnls-plots render --spec PATH
 *   fnls-plots render-all --bundle DIR [--out DIR]
 *
 * Exits 0 on success, 1 on schema mismatch or bad usage.
 */

import { pathToFileURL } from "node:url";

import { renderAll } from "./bundle.js";
import { SchemaError } from "./csv.js";
import { renderKind } from "./figures.js";
import { loadSpec } from "./specfile.js";

function usage(): never {
  console.error(
    "usage: fnls-plots render --spec PATH | fnls-plots render-all --bundle DIR [--out DIR]",
  );
  process.exit(1);
}

function flagValue(args: string[], flag: string): string | undefined {
  const i = args.indexOf(flag);
  if (i < 0) return undefined;
  const value = args[i + 1];
  if (value === undefined) usage();
  return value;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "render") {
      const specPath = flagValue(rest, "--spec");
      if (!specPath) usage();
      const spec = loadSpec(specPath);
      renderKind(spec.kind, spec.input, spec.output, spec.options);
      console.log(`wrote ${spec.output}`);
      return 0;
    }
    if (command === "render-all") {
      const bundle = flagValue(rest, "--bundle");
      if (!bundle) usage();
      const out = flagValue(rest, "--out");
      const rendered = renderAll(bundle, out);
      if (rendered.length === 0) {
        console.error(`no recognised CSV tables in ${bundle}`);
        return 1;
      }
      for (const fig of rendered) {
        console.log(`wrote ${fig.output}`);
      }
      return 0;
    }
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  usage();
}

const entry = process.argv[1];
if (entry && import.meta.url === pathToFileURL(entry).href) {
  process.exit(main(process.argv.slice(2)));
}
