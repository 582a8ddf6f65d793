/**
 * Minimal deterministic SVG scene builder: scales, axes, and marks.
 * No timestamps or random ids; identical input yields identical bytes.
 */

export interface Scale {
  (x: number): number;
  ticks(): number[];
  readonly log: boolean;
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  (f as { ticks: () => number[] }).ticks = () => {
    const step = niceStep(span / 6);
    const out: number[] = [];
    for (let t = Math.ceil(d0 / step) * step; t <= d1 + 1e-12 * Math.abs(span); t += step) {
      out.push(Math.abs(t) < 1e-12 * Math.abs(span) ? 0 : t);
    }
    return out;
  };
  Object.defineProperty(f, "log", { value: false });
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const d0 = Math.log10(domain[0]);
  const d1 = Math.log10(domain[1]);
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((x: number) => r0 + ((Math.log10(x) - d0) / span) * (r1 - r0)) as Scale;
  (f as { ticks: () => number[] }).ticks = () => {
    const out: number[] = [];
    for (let e = Math.ceil(d0); e <= Math.floor(d1); e++) out.push(10 ** e);
    if (out.length === 0) out.push(10 ** d0, 10 ** d1);
    return out;
  };
  Object.defineProperty(f, "log", { value: true });
  return f;
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(Math.abs(raw) || 1));
  const norm = Math.abs(raw) / mag;
  const step = norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10;
  return step * mag;
}

const fmt = (x: number): string => {
  if (!isFinite(x)) return "0";
  const s = x.toPrecision(6);
  return String(Number(s));
};

export const esc = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  raw(s: string): void {
    this.parts.push(s);
  }

  line(x1: number, y1: number, x2: number, y2: number, style: string): void {
    this.raw(`<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${style}/>`);
  }

  circle(cx: number, cy: number, r: number, style: string): void {
    this.raw(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" ${style}/>`);
  }

  rect(x: number, y: number, w: number, h: number, style: string): void {
    this.raw(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ${style}/>`);
  }

  path(points: [number, number][], style: string, close = false): void {
    if (points.length === 0) return;
    const d =
      points.map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x)} ${fmt(y)}`).join(" ") +
      (close ? " Z" : "");
    this.raw(`<path d="${d}" ${style}/>`);
  }

  text(x: number, y: number, s: string, style = "", anchor = "middle"): void {
    this.raw(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" ` +
      `font-family="Helvetica,Arial,sans-serif" font-size="11" ${style}>${esc(s)}</text>`,
    );
  }

  toString(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

export interface Frame {
  svg: Svg;
  x: Scale;
  y: Scale;
  plot: { x0: number; y0: number; x1: number; y1: number };
}

export interface FrameOptions {
  width?: number;
  height?: number;
  xDomain: [number, number];
  yDomain: [number, number];
  xLabel: string;
  yLabel: string;
  yLog?: boolean;
  title?: string;
  xTickFormat?: (t: number) => string;
}

/** Axes, ticks, labels; returns the scales for plotting marks. */
export function makeFrame(o: FrameOptions): Frame {
  const width = o.width ?? 560;
  const height = o.height ?? 400;
  const m = { left: 64, right: 16, top: o.title ? 34 : 16, bottom: 46 };
  const plot = { x0: m.left, y0: m.top, x1: width - m.right, y1: height - m.bottom };
  const svg = new Svg(width, height);
  const x = linearScale(o.xDomain, [plot.x0, plot.x1]);
  const y = o.yLog
    ? logScale(o.yDomain, [plot.y1, plot.y0])
    : linearScale(o.yDomain, [plot.y1, plot.y0]);

  svg.rect(plot.x0, plot.y0, plot.x1 - plot.x0, plot.y1 - plot.y0,
    'fill="none" stroke="black" stroke-width="1"');
  const xfmt = o.xTickFormat ?? ((t: number) => fmt(t));
  for (const t of x.ticks()) {
    const px = x(t);
    svg.line(px, plot.y1, px, plot.y1 + 5, 'stroke="black" stroke-width="1"');
    svg.text(px, plot.y1 + 18, xfmt(t));
  }
  for (const t of y.ticks()) {
    const py = y(t);
    svg.line(plot.x0 - 5, py, plot.x0, py, 'stroke="black" stroke-width="1"');
    const label = o.yLog ? `1e${Math.round(Math.log10(t))}` : fmt(t);
    svg.text(plot.x0 - 8, py + 4, label, "", "end");
  }
  svg.text((plot.x0 + plot.x1) / 2, height - 10, o.xLabel);
  svg.raw(
    `<text x="16" y="${(plot.y0 + plot.y1) / 2}" text-anchor="middle" ` +
    `font-family="Helvetica,Arial,sans-serif" font-size="11" ` +
    `transform="rotate(-90 16 ${(plot.y0 + plot.y1) / 2})">${esc(o.yLabel)}</text>`,
  );
  if (o.title) svg.text((plot.x0 + plot.x1) / 2, 20, o.title, 'font-size="13"');
  return { svg, x, y, plot };
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
