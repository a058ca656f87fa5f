/** Shared command-line surface: every figure script takes --input, --out,
 * --bands, and --dpi. Schema violations and usage mistakes print one line
 * to stderr and exit nonzero; nothing is written on failure. */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { SchemaError } from "./schema.js";
import { CsvError } from "./csv.js";
import { RenderOptions } from "./svg.js";

export class UsageError extends Error {}

export interface FigureFlags extends RenderOptions {
  input: string;
  out: string;
}

export function parseFlags(argv: string[]): FigureFlags {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        input: { type: "string" },
        out: { type: "string" },
        bands: { type: "string", default: "" },
        dpi: { type: "string", default: "96" },
      },
      allowPositionals: false,
    });
  } catch (e) {
    throw new UsageError((e as Error).message);
  }
  const { input, out, bands, dpi } = parsed.values;
  if (!input) throw new UsageError("--input is required");
  if (!out) throw new UsageError("--out is required");
  const dpiNum = Number(dpi);
  if (!Number.isFinite(dpiNum) || dpiNum <= 0) {
    throw new UsageError(`--dpi must be a positive number, got ${JSON.stringify(dpi)}`);
  }
  const bandList = (bands ?? "")
    .split(",")
    .map((b) => b.trim())
    .filter((b) => b.length > 0);
  return { input, out, bands: bandList, dpi: dpiNum };
}

export type Renderer = (text: string, opts: RenderOptions, inputPath: string) => string;

/** Run one figure script end to end; returns the process exit code. */
export function runFigure(
  name: string,
  render: Renderer,
  argv: string[],
  stderr: (msg: string) => void = (msg) => console.error(msg),
): number {
  let flags: FigureFlags;
  try {
    flags = parseFlags(argv);
  } catch (e) {
    if (e instanceof UsageError) {
      stderr(`${name}: ${e.message}`);
      stderr(`usage: ${name} --input FILE --out FILE.svg [--bands a,b,c] [--dpi N]`);
      return 2;
    }
    throw e;
  }
  let text: string;
  try {
    text = readFileSync(flags.input, "utf8");
  } catch (e) {
    stderr(`${name}: cannot read ${flags.input}: ${(e as NodeJS.ErrnoException).code ?? e}`);
    return 1;
  }
  let svg: string;
  try {
    svg = render(text, flags, flags.input);
  } catch (e) {
    if (e instanceof SchemaError || e instanceof CsvError) {
      stderr(`${name}: ${e.message}`);
      return 1;
    }
    throw e;
  }
  writeFileSync(flags.out, svg);
  return 0;
}
