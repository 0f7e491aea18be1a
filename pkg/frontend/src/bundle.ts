/** Default figure set for a result-bundle directory. */

import { existsSync, readdirSync, statSync } from "node:fs";
import { join } from "node:path";

import { renderKind } from "./figures.js";
import type { FigureKind } from "./figures.js";

const DEFAULTS: Array<{ csv: string; kind: FigureKind; figure: string }> = [
  { csv: "snapshots.csv", kind: "contour", figure: "contour.svg" },
  { csv: "invariants.csv", kind: "drift", figure: "drift.svg" },
  { csv: "convergence.csv", kind: "convergence", figure: "convergence.svg" },
  { csv: "solver.csv", kind: "iterations", figure: "iterations.svg" },
];

export interface RenderedFigure {
  kind: FigureKind;
  input: string;
  output: string;
}

/**
 * Render one figure per recognised CSV in the bundle directory.  Solver
 * tables inside immediate subdirectories (per-grid sweeps of the bench)
 * are rendered too, with the subdirectory name appended to the file name.
 */
export function renderAll(bundleDir: string, outDir?: string): RenderedFigure[] {
  const target = outDir ?? bundleDir;
  const rendered: RenderedFigure[] = [];
  for (const { csv, kind, figure } of DEFAULTS) {
    const input = join(bundleDir, csv);
    if (!existsSync(input)) continue;
    const output = join(target, figure);
    renderKind(kind, input, output);
    rendered.push({ kind, input, output });
  }
  for (const entry of readdirSync(bundleDir).sort()) {
    const sub = join(bundleDir, entry);
    if (!statSync(sub).isDirectory()) continue;
    const input = join(sub, "solver.csv");
    if (!existsSync(input)) continue;
    const output = join(target, `iterations_${entry}.svg`);
    renderKind("iterations", input, output);
    rendered.push({ kind: "iterations", input, output });
  }
  return rendered;
}
