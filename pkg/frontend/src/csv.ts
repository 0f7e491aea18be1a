/** Minimal CSV reading for fnls result tables (plain commas, one header). */

import { readFileSync } from "node:fs";

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: expected at least a header line");
  }
  const header = lines[0]!.split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new SchemaError(
        `row has ${row.length} fields, header has ${header.length}`,
      );
    }
  }
  return { header, rows };
}

export function readTable(path: string, expectedHeader: string[]): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new SchemaError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const table = parseCsv(text);
  if (
    table.header.length !== expectedHeader.length ||
    expectedHeader.some((name, i) => table.header[i] !== name)
  ) {
    throw new SchemaError(
      `${path}: header [${table.header.join(",")}] does not match ` +
        `expected [${expectedHeader.join(",")}]`,
    );
  }
  return table;
}

/** Numeric column by name; blank cells become NaN so callers can skip them. */
export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`no column named ${name}`);
  }
  return table.rows.map((row) => {
    const cell = row[idx]!;
    return cell === "" ? Number.NaN : Number(cell);
  });
}

export function textColumn(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`no column named ${name}`);
  }
  return table.rows.map((row) => row[idx]!);
}

export const SNAPSHOTS_HEADER = ["t", "x", "re", "im", "abs"];
export const INVARIANTS_HEADER = ["n", "t", "mass", "H_two_step", "H_single"];
export const SOLVER_HEADER = [
  "n",
  "strategy",
  "iterations",
  "matvecs",
  "final_residual",
  "converged",
];
export const CONVERGENCE_HEADER = ["dt", "max_error"];
