/**
 * Figure builders: each consumes parsed data tables and returns SVG text.
 */

import { DataTable, SchemaError, distinct, numericColumn } from "./csv.js";
import { PALETTE, makeFrame } from "./svg.js";

const PI = Math.PI;

function requireCommand(table: DataTable, want: string): void {
  if (table.command !== want) {
    throw new SchemaError(
      `expected a ${want} CSV but the command tag says "${table.command}"`,
    );
  }
}

function extent(values: number[], padFrac = 0.05): [number, number] {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const pad = (hi - lo || 1) * padFrac;
  return [lo - pad, hi + pad];
}

const piTicks = (t: number): string => {
  const r = t / PI;
  if (Math.abs(r) < 1e-9) return "0";
  if (Math.abs(r - 1) < 1e-9) return "π";
  if (Math.abs(r - 2) < 1e-9) return "2π";
  return `${Number(r.toFixed(2))}π`;
};

/** Energy-momentum scatter of a full small-chain spectrum. */
export function spectrumFigure(table: DataTable): string {
  requireCommand(table, "spectrum");
  const p = numericColumn(table, "p");
  const e = numericColumn(table, "energy");
  const f = makeFrame({
    xDomain: [0, 2 * PI],
    yDomain: extent(e),
    xLabel: "momentum p",
    yLabel: "energy above ground",
    title: "momentum-resolved spectrum",
    xTickFormat: piTicks,
  });
  for (let i = 0; i < p.length; i++) {
    f.svg.circle(f.x(p[i]), f.y(e[i]), 2.2,
      `fill="${PALETTE[0]}" fill-opacity="0.65" stroke="none"`);
  }
  return f.svg.toString();
}

/** Lower edge of the n-excitation continuum from the single-mode band. */
export function continuumEdge(p: number[], eps: number[], order: number): number[] {
  // grid covers [0, 2pi] with the endpoint duplicated; drop it for the
  // periodic min-convolution
  const n = p.length - 1;
  const base = eps.slice(0, n);
  let prev = base;
  for (let m = 2; m <= order; m++) {
    const cur = new Array<number>(n);
    for (let i = 0; i < n; i++) {
      let best = Infinity;
      for (let j = 0; j < n; j++) {
        const v = prev[(i - j + n) % n] + base[j];
        if (v < best) best = v;
      }
      cur[i] = best;
    }
    prev = cur;
  }
  return [...prev, prev[0]];
}

/** Variational bands for every block size plus shaded continua. */
export function dispersionFigure(table: DataTable): string {
  requireCommand(table, "dispersion");
  const ells = distinct(table, "ell");
  const bands = new Map<number, [number, number][]>();
  for (const ell of ells) {
    const pts = table.rows
      .filter((r) => r.ell === ell && r.level === 0)
      .map((r) => [r.p as number, r.energy as number] as [number, number])
      .sort((a, b) => a[0] - b[0]);
    bands.set(ell, pts);
  }
  const best = bands.get(ells[ells.length - 1])!;
  const pGrid = best.map(([p]) => p);
  const eGrid = best.map(([, e]) => e);
  const edge2 = continuumEdge(pGrid, eGrid, 2);
  const edge3 = continuumEdge(pGrid, eGrid, 3);

  const all = [...eGrid, ...edge3];
  const f = makeFrame({
    xDomain: [0, 2 * PI],
    yDomain: [0, Math.max(...all) * 1.08],
    xLabel: "momentum p",
    yLabel: "excitation energy",
    title: "variational dispersion with continuum edges",
    xTickFormat: piTicks,
  });

  // shaded multi-excitation continua (everything above each lower edge)
  const yTop = f.plot.y0;
  for (const [edge, fill] of [
    [edge3, "rgb(208,208,232)"],
    [edge2, "rgb(228,228,244)"],
  ] as [number[], string][]) {
    const outline: [number, number][] = edge.map((e, i) => [
      f.x(pGrid[i]),
      Math.max(f.y(e), yTop),
    ]);
    outline.push([f.x(pGrid[pGrid.length - 1]), yTop], [f.x(pGrid[0]), yTop]);
    f.svg.path(outline, `fill="${fill}" stroke="none"`, true);
  }
  for (const [edge, dash] of [[edge2, "4 3"], [edge3, "1.5 3"]] as [number[], string][]) {
    f.svg.path(
      edge.map((e, i) => [f.x(pGrid[i]), f.y(e)] as [number, number]),
      `fill="none" stroke="#666" stroke-width="1" stroke-dasharray="${dash}"`,
    );
  }

  ells.forEach((ell, i) => {
    const pts = bands.get(ell)!;
    f.svg.path(
      pts.map(([p, e]) => [f.x(p), f.y(e)] as [number, number]),
      `fill="none" stroke="${PALETTE[i % PALETTE.length]}" stroke-width="1.5"`,
    );
    f.svg.text(f.plot.x1 - 10, f.plot.y0 + 16 + 14 * i, `l = ${ell}`,
      `fill="${PALETTE[i % PALETTE.length]}"`, "end");
  });
  return f.svg.toString();
}

/** Semilog convergence of the lowest-band improvements with block size. */
export function convergeFigure(table: DataTable): string {
  requireCommand(table, "converge");
  const momenta = distinct(table, "p");
  const series = momenta.map((p) =>
    table.rows
      .filter((r) => r.p === p && r.diff_to_next !== null && (r.diff_to_next as number) > 0)
      .map((r) => [r.ell as number, r.diff_to_next as number] as [number, number])
      .sort((a, b) => a[0] - b[0]),
  );
  const diffs = series.flat().map(([, d]) => d);
  if (diffs.length === 0) throw new SchemaError("no positive band differences to plot");
  const ells = series.flat().map(([l]) => l);
  const f = makeFrame({
    xDomain: [Math.min(...ells) - 0.3, Math.max(...ells) + 0.3],
    yDomain: [Math.min(...diffs) / 2, Math.max(...diffs) * 2],
    xLabel: "block size l",
    yLabel: "E(l) - E(l+1)",
    yLog: true,
    title: "band convergence",
  });
  series.forEach((pts, i) => {
    const color = PALETTE[i % PALETTE.length];
    f.svg.path(
      pts.map(([l, d]) => [f.x(l), f.y(d)] as [number, number]),
      `fill="none" stroke="${color}" stroke-width="1.5"`,
    );
    for (const [l, d] of pts) {
      f.svg.circle(f.x(l), f.y(d), 3, `fill="${color}" stroke="none"`);
    }
    f.svg.text(f.plot.x1 - 10, f.plot.y0 + 16 + 14 * i,
      `p = ${piTicks(momenta[i])}`, `fill="${color}"`, "end");
  });
  return f.svg.toString();
}

/**
 * Broadened spectral functions.  One input renders a line plot; several
 * inputs (one momentum each) stack into a heatmap over (p, omega).
 */
export function spectralFigure(tables: DataTable[]): string {
  tables.forEach((t) => requireCommand(t, "spectralfn"));
  if (tables.length === 1) return spectralLine(tables[0]);
  return spectralHeatmap(tables);
}

function spectralLine(table: DataTable): string {
  const w = numericColumn(table, "omega");
  const S = numericColumn(table, "S");
  const f = makeFrame({
    xDomain: extent(w, 0),
    yDomain: [0, Math.max(...S) * 1.08 || 1],
    xLabel: "frequency",
    yLabel: "spectral function S",
    title: "spectral function",
  });
  f.svg.path(
    w.map((x, i) => [f.x(x), f.y(S[i])] as [number, number]),
    `fill="none" stroke="${PALETTE[0]}" stroke-width="1.5"`,
  );
  return f.svg.toString();
}

function spectralHeatmap(tables: DataTable[]): string {
  const sorted = [...tables].sort(
    (a, b) => (a.rows[0].p as number) - (b.rows[0].p as number),
  );
  const omegas = numericColumn(sorted[0], "omega");
  const Smax = Math.max(...sorted.flatMap((t) => numericColumn(t, "S")));
  const f = makeFrame({
    xDomain: [0, 2 * PI],
    yDomain: extent(omegas, 0),
    xLabel: "momentum p",
    yLabel: "frequency",
    title: "spectral function heatmap",
    xTickFormat: piTicks,
  });
  const colW = (f.plot.x1 - f.plot.x0) / sorted.length;
  sorted.forEach((t, i) => {
    const S = numericColumn(t, "S");
    const w = numericColumn(t, "omega");
    const rowH = Math.abs(f.y(w[1]) - f.y(w[0]));
    for (let j = 0; j < w.length; j++) {
      const v = Math.min(1, S[j] / (Smax || 1));
      if (v < 1e-3) continue;
      const shade = Math.round(255 * (1 - v));
      f.svg.rect(
        f.plot.x0 + i * colW, f.y(w[j]) - rowH / 2, colW, rowH,
        `fill="rgb(255,${shade},${shade})" stroke="none"`,
      );
    }
  });
  return f.svg.toString();
}

export type FigureKind = "spectrum" | "dispersion" | "converge" | "spectralfn";

export function render(kind: FigureKind, tables: DataTable[]): string {
  if (tables.length === 0) throw new SchemaError("no input tables");
  switch (kind) {
    case "spectrum":
      return spectrumFigure(tables[0]);
    case "dispersion":
      return dispersionFigure(tables[0]);
    case "converge":
      return convergeFigure(tables[0]);
    case "spectralfn":
      return spectralFigure(tables);
    default:
      throw new SchemaError(`unknown figure kind "${kind as string}"`);
  }
}
