/** Deterministic SVG plot primitives: scales, axes, lines, heat cells. */

export interface Extent {
  min: number;
  max: number;
}

export function extentOf(values: number[], fallback: Extent = { min: 0, max: 1 }): Extent {
  const finite = values.filter((v) => Number.isFinite(v));
  if (finite.length === 0) return fallback;
  let min = Math.min(...finite);
  let max = Math.max(...finite);
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  return { min, max };
}

export interface Scale {
  (value: number): number;
  readonly domain: Extent;
  readonly range: Extent;
  readonly log: boolean;
}

function makeScale(domain: Extent, range: Extent, log: boolean): Scale {
  const d0 = log ? Math.log10(domain.min) : domain.min;
  const d1 = log ? Math.log10(domain.max) : domain.max;
  const span = d1 - d0 || 1;
  const fn = ((value: number) => {
    const v = log ? Math.log10(value) : value;
    return range.min + ((v - d0) / span) * (range.max - range.min);
  }) as Scale;
  Object.defineProperties(fn, {
    domain: { value: domain },
    range: { value: range },
    log: { value: log },
  });
  return fn;
}

export const linearScale = (domain: Extent, range: Extent) =>
  makeScale(domain, range, false);
export const logScale = (domain: Extent, range: Extent) =>
  makeScale(domain, range, true);

export function linearTicks(domain: Extent, count = 6): number[] {
  const span = domain.max - domain.min;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen =
    candidates.find((s) => span / s <= count) ?? candidates[candidates.length - 1]!;
  const ticks: number[] = [];
  for (
    let v = Math.ceil(domain.min / chosen) * chosen;
    v <= domain.max + chosen * 1e-9;
    v += chosen
  ) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export function logTicks(domain: Extent): number[] {
  const lo = Math.ceil(Math.log10(domain.min) - 1e-9);
  const hi = Math.floor(Math.log10(domain.max) + 1e-9);
  const ticks: number[] = [];
  const stride = Math.max(1, Math.ceil((hi - lo) / 8));
  for (let e = lo; e <= hi; e += stride) ticks.push(Math.pow(10, e));
  return ticks;
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 0.01 && abs < 10000) {
    return Number(v.toPrecision(4)).toString();
  }
  return v.toExponential(1).replace("e-", "e-").replace("e+", "e");
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

/** Perceptual-ish dark-blue -> green -> yellow color ramp on [0, 1]. */
export function heatColor(u: number): string {
  const t = Math.min(1, Math.max(0, u));
  const stops = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
  ];
  const pos = t * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(pos));
  const f = pos - i;
  const a = stops[i]!;
  const b = stops[i + 1]!;
  const mix = (k: number) => Math.round(a[k]! + f * (b[k]! - a[k]!));
  return `rgb(${mix(0)},${mix(1)},${mix(2)})`;
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

export interface Frame {
  width: number;
  height: number;
  margin: { left: number; right: number; top: number; bottom: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 720,
  height: 480,
  margin: { left: 72, right: 24, top: 40, bottom: 52 },
};

export class SvgPlot {
  private parts: string[] = [];
  readonly frame: Frame;

  constructor(frame: Frame = DEFAULT_FRAME) {
    this.frame = frame;
  }

  get plotArea(): { x: Extent; y: Extent } {
    const { width, height, margin } = this.frame;
    return {
      x: { min: margin.left, max: width - margin.right },
      y: { min: height - margin.bottom, max: margin.top },
    };
  }

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" ` +
        `height="${h.toFixed(2)}" fill="${fill}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.parts.push(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" ` +
        `y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
    if (points.length === 0) return;
    const path = points
      .map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`)
      .join(" ");
    this.parts.push(
      `<polyline points="${path}" fill="none" stroke="${stroke}" ` +
        `stroke-width="${width}"/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(
      `<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="${r}" fill="${fill}"/>`,
    );
  }

  text(
    x: number,
    y: number,
    content: string,
    opts: { anchor?: string; size?: number; rotate?: boolean; fill?: string } = {},
  ): void {
    const anchor = opts.anchor ?? "middle";
    const size = opts.size ?? 12;
    const fill = opts.fill ?? "#222";
    const transform = opts.rotate ? ` transform="rotate(-90 ${x} ${y})"` : "";
    this.parts.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" text-anchor="${anchor}" ` +
        `font-family="Helvetica, Arial, sans-serif" font-size="${size}" ` +
        `fill="${fill}"${transform}>${esc(content)}</text>`,
    );
  }

  axes(
    xScale: Scale,
    yScale: Scale,
    labels: { x: string; y: string; title?: string },
  ): void {
    const area = this.plotArea;
    this.line(area.x.min, area.y.min, area.x.max, area.y.min, "#222");
    this.line(area.x.min, area.y.min, area.x.min, area.y.max, "#222");
    const xTicks = xScale.log ? logTicks(xScale.domain) : linearTicks(xScale.domain);
    for (const v of xTicks) {
      const px = xScale(v);
      this.line(px, area.y.min, px, area.y.min + 5, "#222");
      this.text(px, area.y.min + 18, xScale.log ? `1e${Math.round(Math.log10(v))}` : fmt(v), { size: 11 });
    }
    const yTicks = yScale.log ? logTicks(yScale.domain) : linearTicks(yScale.domain);
    for (const v of yTicks) {
      const py = yScale(v);
      this.line(area.x.min - 5, py, area.x.min, py, "#222");
      this.text(area.x.min - 8, py + 4, yScale.log ? `1e${Math.round(Math.log10(v))}` : fmt(v), {
        anchor: "end",
        size: 11,
      });
    }
    const { width, height, margin } = this.frame;
    this.text((margin.left + width - margin.right) / 2, height - 14, labels.x);
    this.text(18, (margin.top + height - margin.bottom) / 2, labels.y, {
      rotate: true,
    });
    if (labels.title) {
      this.text((margin.left + width - margin.right) / 2, margin.top - 16, labels.title, {
        size: 14,
      });
    }
  }

  render(): string {
    const { width, height } = this.frame;
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">\n` +
      `<rect width="${width}" height="${height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}
