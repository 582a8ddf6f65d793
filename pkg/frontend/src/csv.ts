/**
 * Reader for the laboratory's annotated CSV files.
 *
 * Files start with `#`-prefixed metadata lines (`# command: ...`,
 * `# config: {...}`, `# constants: {...}`) followed by a regular CSV table.
 * Loading refuses files without a recognized command tag and reports schema
 * mismatches by naming the missing column.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface DataTable {
  command: string;
  config: Record<string, unknown>;
  constants: Record<string, number | string | null>;
  columns: string[];
  rows: Record<string, number | null>[];
}

/** Columns every command is documented to emit, in order. */
export const SCHEMAS: Record<string, string[]> = {
  spectrum: ["p_index", "p", "alpha", "energy"],
  filter: ["ell", "T", "q", "overlap", "norm", "seminorm", "F", "bound", "f", "DX"],
  dispersion: ["p", "ell", "level", "energy", "degeneracy", "rank"],
  converge: ["p", "ell", "Emin", "diff_to_next"],
  spectralfn: ["p", "omega", "reS", "imD", "S"],
  lrcheck: ["t", "dist", "commutator", "bound"],
};

/** The residues companion file of a spectralfn run. */
export const RESIDUE_COLUMNS = ["p", "energy", "weight"];

export class SchemaError extends Error {}

export function loadTable(path: string, residues = false): DataTable {
  const text = readFileSync(path, "utf8");
  return parseTable(text, path, residues);
}

export function parseTable(text: string, name = "<input>", residues = false): DataTable {
  const lines = text.split(/\r?\n/);
  const metaLines: string[] = [];
  let i = 0;
  for (; i < lines.length && lines[i].startsWith("#"); i++) {
    metaLines.push(lines[i].slice(1).trim());
  }
  const meta: Record<string, string> = {};
  for (const ln of metaLines) {
    const sep = ln.indexOf(":");
    if (sep > 0) meta[ln.slice(0, sep).trim()] = ln.slice(sep + 1).trim();
  }
  const command = meta["command"];
  if (!command || !(command in SCHEMAS)) {
    throw new SchemaError(
      `${name}: no recognized command tag in the metadata header ` +
      `(found ${command ?? "none"}; expected one of ${Object.keys(SCHEMAS).join(", ")})`,
    );
  }
  const body = lines.slice(i).join("\n").trim();
  if (!body) throw new SchemaError(`${name}: no data rows`);

  const parsed = Papa.parse<Record<string, string>>(body, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${name}: malformed CSV: ${parsed.errors[0].message}`);
  }
  const columns = parsed.meta.fields ?? [];
  const expected = residues ? RESIDUE_COLUMNS : SCHEMAS[command];
  for (const col of expected) {
    if (!columns.includes(col)) {
      throw new SchemaError(`${name}: missing column "${col}" required by the ${command} schema`);
    }
  }
  const rows = parsed.data.map((raw) => {
    const row: Record<string, number | null> = {};
    for (const col of columns) {
      const v = raw[col];
      row[col] = v === undefined || v === "" ? null : Number(v);
    }
    return row;
  });
  if (rows.length === 0) throw new SchemaError(`${name}: no data rows`);

  let config: Record<string, unknown> = {};
  let constants: Record<string, number | string | null> = {};
  try {
    if (meta["config"]) config = JSON.parse(meta["config"]);
  } catch { /* header config is informational; tolerate older files */ }
  try {
    if (meta["constants"]) constants = JSON.parse(meta["constants"]);
  } catch { /* ditto */ }
  return { command, config, constants, columns, rows };
}

/** Numeric column as an array, with nulls dropped when requested. */
export function column(table: DataTable, name: string): (number | null)[] {
  if (!table.columns.includes(name)) {
    throw new SchemaError(`missing column "${name}"`);
  }
  return table.rows.map((r) => r[name]);
}

export function numericColumn(table: DataTable, name: string): number[] {
  return column(table, name).filter((v): v is number => v !== null && isFinite(v));
}

/** Distinct values of a column, ascending. */
export function distinct(table: DataTable, name: string): number[] {
  return [...new Set(numericColumn(table, name))].sort((a, b) => a - b);
}
