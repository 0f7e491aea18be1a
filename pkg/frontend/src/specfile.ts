/** Flat key = value figure-spec files (same format the simulator uses). */

import { readFileSync } from "node:fs";
import { dirname, isAbsolute, resolve } from "node:path";

import { SchemaError } from "./csv.js";
import type { FigureKind, FigureOptions } from "./figures.js";

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  output: string;
  options: FigureOptions;
}

const KEYS = new Set(["kind", "input", "output", "title", "x_label", "y_label"]);
const KINDS = new Set(["contour", "drift", "convergence", "iterations"]);

export function parseSpecText(text: string, baseDir: string): FigureSpec {
  const values = new Map<string, string>();
  text.split(/\r?\n/).forEach((line, i) => {
    const stripped = line.trim();
    if (stripped === "" || stripped.startsWith("#")) return;
    const eq = stripped.indexOf("=");
    if (eq < 0) {
      throw new SchemaError(`spec line ${i + 1}: expected 'key = value'`);
    }
    const key = stripped.slice(0, eq).trim();
    if (!KEYS.has(key)) {
      throw new SchemaError(`spec line ${i + 1}: unknown key ${key}`);
    }
    values.set(key, stripped.slice(eq + 1).trim());
  });

  const kind = values.get("kind");
  if (!kind || !KINDS.has(kind)) {
    throw new SchemaError(
      `spec needs kind = contour | drift | convergence | iterations, got ${kind}`,
    );
  }
  const input = values.get("input");
  const output = values.get("output");
  if (!input || !output) {
    throw new SchemaError("spec needs both input and output paths");
  }
  const anchor = (p: string) => (isAbsolute(p) ? p : resolve(baseDir, p));
  return {
    kind: kind as FigureKind,
    input: anchor(input),
    output: anchor(output),
    options: {
      title: values.get("title"),
      xLabel: values.get("x_label"),
      yLabel: values.get("y_label"),
    },
  };
}

export function loadSpec(path: string): FigureSpec {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new SchemaError(`cannot read spec ${path}: ${(err as Error).message}`);
  }
  return parseSpecText(text, dirname(resolve(path)));
}
