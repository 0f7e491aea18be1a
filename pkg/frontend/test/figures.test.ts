import assert from "node:assert/strict";
import { existsSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { test } from "node:test";

import { SOLVER_HEADER, column, readTable } from "../src/csv.js";
import {
  fitSlope,
  renderContour,
  renderConvergence,
  renderDrift,
  renderIterations,
} from "../src/figures.js";
import { fixture, scratchDir } from "./helpers.js";

test("contour figure renders from the bundle snapshots", () => {
  const out = join(scratchDir(), "contour.svg");
  renderContour(fixture("bundle/snapshots.csv"), out);
  const svg = readFileSync(out, "utf8");
  assert.match(svg, /^<svg /);
  assert.ok(svg.includes("<rect"), "heat cells present");
  assert.ok(svg.includes("|u(t, x)|"));
});

test("drift figure renders log-scale series", () => {
  const out = join(scratchDir(), "drift.svg");
  renderDrift(fixture("bundle/invariants.csv"), out);
  const svg = readFileSync(out, "utf8");
  assert.ok(svg.includes("polyline"));
  assert.ok(svg.includes("1e-"), "log ticks present");
});

test("empty-but-valid invariants produce an empty-axes figure", () => {
  const dir = scratchDir();
  const input = join(dir, "invariants.csv");
  writeFileSync(input, "n,t,mass,H_two_step,H_single\n");
  const out = join(dir, "drift.svg");
  renderDrift(input, out);
  assert.ok(existsSync(out));
  assert.match(readFileSync(out, "utf8"), /^<svg /);
});

test("convergence figure annotates a slope near two", () => {
  const out = join(scratchDir(), "conv.svg");
  const { slope } = renderConvergence(fixture("bundle/convergence.csv"), out);
  assert.ok(slope >= 1.75 && slope <= 2.25, `slope ${slope} outside [1.75, 2.25]`);
  const svg = readFileSync(out, "utf8");
  assert.match(svg, /fitted slope = \d\.\d\d/);
  assert.ok(svg.includes("slope-2 reference"));
  const text = /fitted slope = (\d+\.\d+)/.exec(svg);
  const annotated = Number(text![1]);
  assert.ok(annotated >= 1.75 && annotated <= 2.25);
});

test("fitSlope recovers an exact quadratic", () => {
  const dt = [0.04, 0.02, 0.01];
  const err = dt.map((d) => 3 * d * d);
  assert.ok(Math.abs(fitSlope(dt, err) - 2) < 1e-12);
});

test("iteration figure from the Table-1 run is a flat line at 3", () => {
  const table = readTable(fixture("bundle/solver.csv"), SOLVER_HEADER);
  const iterations = column(table, "iterations");
  assert.ok(iterations.length > 0);
  assert.ok(iterations.every((v) => v === 3), "series constant at 3");

  const out = join(scratchDir(), "iters.svg");
  renderIterations(fixture("bundle/solver.csv"), out);
  const svg = readFileSync(out, "utf8");
  assert.ok(svg.includes("transformed-precond-bicgstab"));
  // a constant series renders as a single horizontal polyline: every point
  // shares one y coordinate
  const match = /<polyline points="([^"]+)"/.exec(svg);
  assert.ok(match);
  const ys = new Set(match![1]!.split(" ").map((p) => p.split(",")[1]));
  assert.equal(ys.size, 1);
});

test("rendering leaves inputs untouched and is idempotent", () => {
  const input = fixture("bundle/invariants.csv");
  const before = readFileSync(input);
  const dir = scratchDir();
  const out1 = join(dir, "a.svg");
  const out2 = join(dir, "b.svg");
  renderDrift(input, out1);
  renderDrift(input, out2);
  assert.deepEqual(readFileSync(input), before);
  assert.equal(readFileSync(out1, "utf8"), readFileSync(out2, "utf8"));
});
