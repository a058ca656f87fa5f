/** Loaders for the documented report formats. Every loader validates the
 * fields it consumes and raises SchemaError naming the first missing or
 * malformed column, so a renderer never draws from a half-read file. */

import { CsvError, numericCell, parseCsv } from "./csv.js";

export class SchemaError extends Error {}

/** The analysis reports are emitted by a writer whose JSON dialect spells
 * missing means as bare NaN tokens; map those to null before parsing. */
export function parseReportJson(text: string, path: string): unknown {
  const cleaned = text.replace(/(?<=[:,[\s])(?:NaN|-?Infinity)(?=[,\]}\s])/g, "null");
  try {
    return JSON.parse(cleaned);
  } catch (e) {
    throw new SchemaError(`${path}: not valid JSON: ${(e as Error).message}`);
  }
}

function asObject(v: unknown, what: string, path: string): Record<string, unknown> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    throw new SchemaError(`${path}: ${what} is not an object`);
  }
  return v as Record<string, unknown>;
}

function need(obj: Record<string, unknown>, key: string, where: string, path: string): unknown {
  if (!(key in obj)) {
    throw new SchemaError(`${path}: missing column ${key} in ${where}`);
  }
  return obj[key];
}

function needNumber(obj: Record<string, unknown>, key: string, where: string, path: string): number {
  const v = need(obj, key, where, path);
  if (typeof v !== "number") {
    throw new SchemaError(`${path}: column ${key} in ${where} is not a number`);
  }
  return v;
}

/** A nullable mean: null marks a cell with no coverage, never zero. */
function needMean(obj: Record<string, unknown>, key: string, where: string, path: string): number | null {
  const v = need(obj, key, where, path);
  if (v === null) return null;
  if (typeof v !== "number") {
    throw new SchemaError(`${path}: column ${key} in ${where} is not a number`);
  }
  return v;
}

// ---------------------------------------------------------------------------
// layer profile (line-plot family)

export interface LayerEntry {
  layer: number;
  count: number;
  meanRhoD: number | null;
  meanCosDw: number | null;
}

export function loadLayerProfile(text: string, path: string): LayerEntry[] {
  if (text.trimStart().startsWith("{")) {
    const root = asObject(parseReportJson(text, path), "report", path);
    const layers = need(root, "layers", "report", path);
    if (!Array.isArray(layers) || layers.length === 0) {
      throw new SchemaError(`${path}: layers is not a non-empty array`);
    }
    return layers.map((raw, i) => {
      const row = asObject(raw, `layers[${i}]`, path);
      return {
        layer: needNumber(row, "layer", `layers[${i}]`, path),
        count: needNumber(row, "count", `layers[${i}]`, path),
        meanRhoD: needMean(row, "mean_rho_d", `layers[${i}]`, path),
        meanCosDw: needMean(row, "mean_cos_dw", `layers[${i}]`, path),
      };
    });
  }
  let table;
  try {
    table = parseCsv(text, path);
  } catch (e) {
    if (e instanceof CsvError) throw new SchemaError(e.message);
    throw e;
  }
  for (const col of ["layer", "mean_rho_d", "mean_cos_dw"]) {
    if (!table.header.includes(col)) {
      throw new SchemaError(`${path}: missing column ${col}`);
    }
  }
  if (table.rows.length === 0) throw new SchemaError(`${path}: no layer rows`);
  const idx = (name: string) => table.header.indexOf(name);
  const countIdx = table.header.indexOf("count");
  try {
    return table.rows.map((row, i) => ({
      layer: numericCell(row[idx("layer")] as string, "layer", i, path),
      count: countIdx >= 0 ? numericCell(row[countIdx] as string, "count", i, path) : 1,
      meanRhoD: numericCell(row[idx("mean_rho_d")] as string, "mean_rho_d", i, path),
      meanCosDw: numericCell(row[idx("mean_cos_dw")] as string, "mean_cos_dw", i, path),
    }));
  } catch (e) {
    if (e instanceof CsvError) throw new SchemaError(e.message);
    throw e;
  }
}

// ---------------------------------------------------------------------------
// gate-density report (heatmap family)

export interface DensityPanel {
  bins: number;
  layers: number[];
  total: number;
  gateEdges: number[];
  gateCounts: number[][];
  magEdgesX: number[];
  magEdgesY: number[];
  magCounts: number[][];
}

export interface DensityReport {
  bins: number;
  nLayers: number;
  bands: Map<string, DensityPanel>;
}

function numberArray(v: unknown, what: string, path: string): number[] {
  if (!Array.isArray(v) || v.some((x) => typeof x !== "number")) {
    throw new SchemaError(`${path}: ${what} is not a numeric array`);
  }
  return v as number[];
}

function countGrid(v: unknown, bins: number, what: string, path: string): number[][] {
  if (!Array.isArray(v) || v.length !== bins) {
    throw new SchemaError(`${path}: ${what} is not a ${bins}x${bins} grid`);
  }
  return v.map((row, i) => numberArray(row, `${what}[${i}]`, path)).map((row, i) => {
    if (row.length !== bins) {
      throw new SchemaError(`${path}: ${what}[${i}] has ${row.length} cells, expected ${bins}`);
    }
    return row;
  });
}

function loadPanel(raw: unknown, where: string, path: string): DensityPanel {
  const obj = asObject(raw, where, path);
  const bins = needNumber(obj, "bins", where, path);
  return {
    bins,
    layers: numberArray(need(obj, "layers", where, path), `${where}.layers`, path),
    total: needNumber(obj, "total", where, path),
    gateEdges: numberArray(need(obj, "gate_edges", where, path), `${where}.gate_edges`, path),
    gateCounts: countGrid(need(obj, "gate_counts", where, path), bins, `${where}.gate_counts`, path),
    magEdgesX: numberArray(need(obj, "mag_edges_x", where, path), `${where}.mag_edges_x`, path),
    magEdgesY: numberArray(need(obj, "mag_edges_y", where, path), `${where}.mag_edges_y`, path),
    magCounts: countGrid(need(obj, "mag_counts", where, path), bins, `${where}.mag_counts`, path),
  };
}

export function loadDensityReport(text: string, path: string): DensityReport {
  const root = asObject(parseReportJson(text, path), "report", path);
  const bins = needNumber(root, "bins", "report", path);
  const nLayers = needNumber(root, "n_layers", "report", path);
  const bandsRaw = asObject(need(root, "bands", "report", path), "bands", path);
  const bands = new Map<string, DensityPanel>();
  for (const [name, raw] of Object.entries(bandsRaw)) {
    bands.set(name, loadPanel(raw, `bands.${name}`, path));
  }
  if (bands.size === 0) throw new SchemaError(`${path}: bands is empty`);
  return { bins, nLayers, bands };
}

// ---------------------------------------------------------------------------
// anchor-aligned difference report (diff-map family)

export interface AnchorReport {
  anchor: string;
  window: number;
  nLayers: number;
  offsets: number[];
  diff: (number | null)[][];
  alignedA: number;
  alignedB: number;
  excludedA: number;
  excludedB: number;
}

export function loadAnchorReport(text: string, path: string): AnchorReport {
  const root = asObject(parseReportJson(text, path), "report", path);
  const anchor = need(root, "anchor", "report", path);
  if (typeof anchor !== "string") throw new SchemaError(`${path}: anchor is not a string`);
  const nLayers = needNumber(root, "n_layers", "report", path);
  const offsets = numberArray(need(root, "offsets", "report", path), "offsets", path);
  const diffRaw = need(root, "diff", "report", path);
  if (!Array.isArray(diffRaw) || diffRaw.length !== nLayers) {
    throw new SchemaError(`${path}: diff does not have n_layers rows`);
  }
  const diff = diffRaw.map((row, i) => {
    if (!Array.isArray(row) || row.length !== offsets.length) {
      throw new SchemaError(`${path}: diff[${i}] does not span the offsets`);
    }
    return row.map((v) => {
      if (v === null) return null;
      if (typeof v !== "number") {
        throw new SchemaError(`${path}: diff[${i}] holds a non-numeric cell`);
      }
      return v;
    });
  });
  return {
    anchor,
    window: needNumber(root, "window", "report", path),
    nLayers,
    offsets,
    diff,
    alignedA: needNumber(root, "aligned_a", "report", path),
    alignedB: needNumber(root, "aligned_b", "report", path),
    excludedA: needNumber(root, "excluded_a", "report", path),
    excludedB: needNumber(root, "excluded_b", "report", path),
  };
}

// ---------------------------------------------------------------------------
// model-summary table (Pareto scatter family)

export interface ParetoPoint {
  label: string;
  family: string;
  params: number;
  bpb: number;
}

export function loadParetoTable(text: string, path: string): ParetoPoint[] {
  let table;
  try {
    table = parseCsv(text, path);
  } catch (e) {
    if (e instanceof CsvError) throw new SchemaError(e.message);
    throw e;
  }
  for (const col of ["label", "family", "params", "bpb"]) {
    if (!table.header.includes(col)) {
      throw new SchemaError(`${path}: missing column ${col}`);
    }
  }
  if (table.rows.length === 0) throw new SchemaError(`${path}: no model rows`);
  const idx = (name: string) => table.header.indexOf(name);
  try {
    return table.rows.map((row, i) => ({
      label: (row[idx("label")] as string).trim(),
      family: (row[idx("family")] as string).trim(),
      params: numericCell(row[idx("params")] as string, "params", i, path),
      bpb: numericCell(row[idx("bpb")] as string, "bpb", i, path),
    }));
  } catch (e) {
    if (e instanceof CsvError) throw new SchemaError(e.message);
    throw e;
  }
}
