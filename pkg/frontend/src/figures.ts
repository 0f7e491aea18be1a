/** The four figure kinds rendered from fnls CSV tables. */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import {
  CONVERGENCE_HEADER,
  INVARIANTS_HEADER,
  SNAPSHOTS_HEADER,
  SOLVER_HEADER,
  SchemaError,
  column,
  readTable,
  textColumn,
} from "./csv.js";
import {
  DEFAULT_FRAME,
  PALETTE,
  SvgPlot,
  extentOf,
  fmt,
  heatColor,
  linearScale,
  logScale,
} from "./svg.js";

export type FigureKind = "contour" | "drift" | "convergence" | "iterations";

export interface FigureOptions {
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

/** Series drift floor: log axes cannot show exact zeros. */
const DRIFT_FLOOR = 1e-18;

function writeFigure(output: string, svg: string): void {
  mkdirSync(dirname(output), { recursive: true });
  writeFileSync(output, svg);
}

function uniqueSorted(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

/** Average |u| onto a coarser cell grid so huge runs stay renderable. */
function downsampleIndex(n: number, maxCells: number): number[] {
  const stride = Math.max(1, Math.ceil(n / maxCells));
  const picks: number[] = [];
  for (let i = 0; i < n; i += stride) picks.push(i);
  return picks;
}

export function renderContour(
  input: string,
  output: string,
  opts: FigureOptions = {},
): void {
  const table = readTable(input, SNAPSHOTS_HEADER);
  const t = column(table, "t");
  const x = column(table, "x");
  const abs = column(table, "abs");

  const times = uniqueSorted(t);
  const xs = uniqueSorted(x);
  const plot = new SvgPlot(DEFAULT_FRAME);
  const area = plot.plotArea;

  if (times.length === 0) {
    plot.axes(
      linearScale({ min: 0, max: 1 }, area.x),
      linearScale({ min: 0, max: 1 }, area.y),
      { x: opts.xLabel ?? "x", y: opts.yLabel ?? "t", title: opts.title },
    );
    writeFigure(output, plot.render());
    return;
  }

  const tIndex = new Map(times.map((v, i) => [v, i]));
  const xIndex = new Map(xs.map((v, i) => [v, i]));
  const grid: number[][] = times.map(() => xs.map(() => Number.NaN));
  for (let row = 0; row < t.length; row++) {
    grid[tIndex.get(t[row]!)!]![xIndex.get(x[row]!)!] = abs[row]!;
  }

  const valueExtent = extentOf(abs, { min: 0, max: 1 });
  const xScale = linearScale(extentOf(xs), area.x);
  const tScale = linearScale(extentOf(times), area.y);

  const tPicks = downsampleIndex(times.length, 220);
  const xPicks = downsampleIndex(xs.length, 220);
  for (let ti = 0; ti < tPicks.length; ti++) {
    const row = tPicks[ti]!;
    const tLo = tScale(times[row]!);
    const tHi =
      ti + 1 < tPicks.length ? tScale(times[tPicks[ti + 1]!]!) : tScale.range.max;
    for (let xi = 0; xi < xPicks.length; xi++) {
      const col = xPicks[xi]!;
      const xLo = xScale(xs[col]!);
      const xHi =
        xi + 1 < xPicks.length ? xScale(xs[xPicks[xi + 1]!]!) : xScale.range.max;
      const value = grid[row]![col]!;
      if (!Number.isFinite(value)) continue;
      const u =
        (value - valueExtent.min) / (valueExtent.max - valueExtent.min || 1);
      plot.rect(
        Math.min(xLo, xHi),
        Math.min(tLo, tHi),
        Math.abs(xHi - xLo) + 0.5,
        Math.abs(tHi - tLo) + 0.5,
        heatColor(u),
      );
    }
  }
  plot.axes(xScale, tScale, {
    x: opts.xLabel ?? "x",
    y: opts.yLabel ?? "t",
    title: opts.title ?? "|u(t, x)|",
  });
  plot.text(
    plot.frame.width - plot.frame.margin.right,
    plot.frame.margin.top - 16,
    `|u| in [${fmt(valueExtent.min)}, ${fmt(valueExtent.max)}]`,
    { anchor: "end", size: 11, fill: "#555" },
  );
  writeFigure(output, plot.render());
}

export function renderDrift(
  input: string,
  output: string,
  opts: FigureOptions = {},
): void {
  const table = readTable(input, INVARIANTS_HEADER);
  const t = column(table, "t");
  const series: Array<{ label: string; values: number[] }> = [
    { label: "|M - M(0)|", values: column(table, "mass") },
    { label: "|H - H(first)|", values: column(table, "H_two_step") },
    { label: "|H~ - H~(0)|", values: column(table, "H_single") },
  ];

  const plot = new SvgPlot(DEFAULT_FRAME);
  const area = plot.plotArea;
  const drifts = series.map(({ label, values }) => {
    const base = values.find((v) => Number.isFinite(v));
    const points: Array<[number, number]> = [];
    if (base !== undefined) {
      for (let i = 0; i < values.length; i++) {
        const v = values[i]!;
        if (!Number.isFinite(v)) continue;
        points.push([t[i]!, Math.max(Math.abs(v - base), DRIFT_FLOOR)]);
      }
    }
    return { label, points };
  });

  const allDrift = drifts.flatMap(({ points }) => points.map(([, d]) => d));
  const allT = drifts.flatMap(({ points }) => points.map(([tv]) => tv));
  const xScale = linearScale(extentOf(allT, { min: 0, max: 1 }), area.x);
  const dExtent = extentOf(allDrift, { min: 1e-12, max: 1 });
  const yScale = logScale(
    { min: Math.max(dExtent.min, DRIFT_FLOOR), max: dExtent.max * 1.5 },
    area.y,
  );

  drifts.forEach(({ label, points }, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    plot.polyline(
      points.map(([tv, d]) => [xScale(tv), yScale(Math.max(d, yScale.domain.min))]),
      color,
      1.2,
    );
    plot.text(area.x.max - 8, area.y.max + 14 + 14 * i, label, {
      anchor: "end",
      size: 11,
      fill: color,
    });
  });
  plot.axes(xScale, yScale, {
    x: opts.xLabel ?? "t",
    y: opts.yLabel ?? "invariant drift",
    title: opts.title ?? "Invariant drift",
  });
  writeFigure(output, plot.render());
}

/** Least-squares slope of log(error) against log(dt). */
export function fitSlope(dt: number[], err: number[]): number {
  const pairs = dt
    .map((d, i) => [d, err[i]!] as const)
    .filter(([d, e]) => d > 0 && e > 0);
  if (pairs.length < 2) return Number.NaN;
  const lx = pairs.map(([d]) => Math.log(d));
  const ly = pairs.map(([, e]) => Math.log(e));
  const mx = lx.reduce((a, b) => a + b, 0) / lx.length;
  const my = ly.reduce((a, b) => a + b, 0) / ly.length;
  let num = 0;
  let den = 0;
  for (let i = 0; i < lx.length; i++) {
    num += (lx[i]! - mx) * (ly[i]! - my);
    den += (lx[i]! - mx) ** 2;
  }
  return num / den;
}

export function renderConvergence(
  input: string,
  output: string,
  opts: FigureOptions = {},
): { slope: number } {
  const table = readTable(input, CONVERGENCE_HEADER);
  const dt = column(table, "dt");
  const err = column(table, "max_error");
  const plot = new SvgPlot(DEFAULT_FRAME);
  const area = plot.plotArea;

  const slope = fitSlope(dt, err);
  const xScale = logScale(extentOf(dt, { min: 1e-3, max: 1 }), area.x);
  const yScale = logScale(extentOf(err, { min: 1e-6, max: 1 }), area.y);

  if (dt.length > 0) {
    // second-order reference line anchored at the coarsest point
    const anchorIdx = dt.indexOf(Math.max(...dt));
    const a = err[anchorIdx]! / Math.max(dt[anchorIdx]!, 1e-300) ** 2;
    const guide = dt.map(
      (d) => [xScale(d), yScale(a * d * d)] as [number, number],
    );
    plot.polyline(
      guide.sort((p, q) => p[0] - q[0]),
      "#999",
      1,
    );
    plot.text(area.x.max - 8, area.y.max + 14, "slope-2 reference", {
      anchor: "end",
      size: 11,
      fill: "#999",
    });

    const pts = dt
      .map((d, i) => [xScale(d), yScale(err[i]!)] as [number, number])
      .sort((p, q) => p[0] - q[0]);
    plot.polyline(pts, PALETTE[0]!, 1.5);
    for (const [px, py] of pts) plot.circle(px, py, 3.5, PALETTE[0]!);
    plot.text(
      area.x.min + 12,
      area.y.max + 14,
      `fitted slope = ${slope.toFixed(2)}`,
      { anchor: "start", size: 13 },
    );
  }
  plot.axes(xScale, yScale, {
    x: opts.xLabel ?? "dt",
    y: opts.yLabel ?? "max error at t_end",
    title: opts.title ?? "Time-step convergence",
  });
  writeFigure(output, plot.render());
  return { slope };
}

export function renderIterations(
  input: string,
  output: string,
  opts: FigureOptions = {},
): void {
  const table = readTable(input, SOLVER_HEADER);
  const n = column(table, "n");
  const iterations = column(table, "iterations");
  const strategies = textColumn(table, "strategy");

  const plot = new SvgPlot(DEFAULT_FRAME);
  const area = plot.plotArea;
  const names = [...new Set(strategies)];
  const xScale = linearScale(extentOf(n, { min: 0, max: 1 }), area.x);
  const iterExtent = extentOf(iterations, { min: 0, max: 1 });
  const yScale = linearScale(
    { min: 0, max: Math.max(iterExtent.max * 1.15, 1) },
    area.y,
  );

  names.forEach((name, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const points: Array<[number, number]> = [];
    for (let row = 0; row < n.length; row++) {
      if (strategies[row] !== name || !Number.isFinite(iterations[row]!)) continue;
      points.push([xScale(n[row]!), yScale(iterations[row]!)]);
    }
    plot.polyline(points, color, 1.4);
    plot.text(area.x.max - 8, area.y.max + 14 + 14 * i, name, {
      anchor: "end",
      size: 11,
      fill: color,
    });
  });
  plot.axes(xScale, yScale, {
    x: opts.xLabel ?? "time step",
    y: opts.yLabel ?? "iterations to converge",
    title: opts.title ?? "Solver iterations per step",
  });
  writeFigure(output, plot.render());
}

export const RENDERERS: Record<
  FigureKind,
  (input: string, output: string, opts?: FigureOptions) => unknown
> = {
  contour: renderContour,
  drift: renderDrift,
  convergence: renderConvergence,
  iterations: renderIterations,
};

export function renderKind(
  kind: string,
  input: string,
  output: string,
  opts: FigureOptions = {},
): void {
  const renderer = RENDERERS[kind as FigureKind];
  if (!renderer) {
    throw new SchemaError(
      `unknown figure kind ${kind}; expected contour, drift, convergence or iterations`,
    );
  }
  renderer(input, output, opts);
}
