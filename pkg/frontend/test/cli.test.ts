import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { parseFlags, runFigure, UsageError } from "../src/cli.js";
import { renderLayerProfileFromText } from "../src/layers.js";
import { renderDensityFromText } from "../src/density.js";
import { densityJson, layersJson } from "./helpers.js";

describe("parseFlags", () => {
  it("parses the full flag surface", () => {
    const flags = parseFlags(["--input", "a.json", "--out", "b.svg", "--bands", "early,late", "--dpi", "150"]);
    expect(flags).toEqual({ input: "a.json", out: "b.svg", bands: ["early", "late"], dpi: 150 });
  });

  it("defaults bands to empty and dpi to 96", () => {
    const flags = parseFlags(["--input", "a", "--out", "b"]);
    expect(flags.bands).toEqual([]);
    expect(flags.dpi).toBe(96);
  });

  it("requires --input and --out and a sane --dpi", () => {
    expect(() => parseFlags(["--out", "b"])).toThrowError(UsageError);
    expect(() => parseFlags(["--input", "a"])).toThrowError(/--out is required/);
    expect(() => parseFlags(["--input", "a", "--out", "b", "--dpi", "zero"])).toThrowError(/--dpi/);
  });

  it("rejects unknown flags", () => {
    expect(() => parseFlags(["--input", "a", "--out", "b", "--color", "red"])).toThrowError(UsageError);
  });
});

describe("runFigure", () => {
  let dir: string;
  let errors: string[];
  const stderr = (msg: string) => errors.push(msg);

  beforeEach(() => {
    dir = mkdtempSync(join(tmpdir(), "figures-"));
    errors = [];
  });
  afterEach(() => {
    rmSync(dir, { recursive: true, force: true });
  });

  it("renders a figure end to end", () => {
    const input = join(dir, "layers.json");
    const out = join(dir, "layers.svg");
    writeFileSync(input, layersJson());
    const code = runFigure("figure-layers", renderLayerProfileFromText, ["--input", input, "--out", out], stderr);
    expect(code).toBe(0);
    expect(errors).toEqual([]);
    expect(readFileSync(out, "utf8")).toContain("<svg ");
  });

  it("exits nonzero on a schema violation, naming the column, writing nothing", () => {
    const input = join(dir, "broken.json");
    const out = join(dir, "broken.svg");
    writeFileSync(input, layersJson().replace(/"mean_rho_d"/g, '"rho"'));
    const code = runFigure("figure-layers", renderLayerProfileFromText, ["--input", input, "--out", out], stderr);
    expect(code).toBe(1);
    expect(errors.join("\n")).toMatch(/missing column mean_rho_d/);
    expect(() => readFileSync(out)).toThrowError();
  });

  it("exits nonzero when the input file is absent", () => {
    const code = runFigure(
      "figure-layers",
      renderLayerProfileFromText,
      ["--input", join(dir, "nope.json"), "--out", join(dir, "x.svg")],
      stderr,
    );
    expect(code).toBe(1);
    expect(errors[0]).toContain("cannot read");
  });

  it("exits 2 with usage on bad flags", () => {
    const code = runFigure("figure-layers", renderLayerProfileFromText, ["--out", "only.svg"], stderr);
    expect(code).toBe(2);
    expect(errors.join("\n")).toContain("usage: figure-layers");
  });

  it("threads --bands through to the renderer", () => {
    const input = join(dir, "density.json");
    const out = join(dir, "density.svg");
    writeFileSync(input, densityJson(3));
    const code = runFigure(
      "figure-density",
      renderDensityFromText,
      ["--input", input, "--out", out, "--bands", "early"],
      stderr,
    );
    expect(code).toBe(0);
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("early");
    expect(svg).not.toContain("middle (");
  });

  it("reports an unknown band as a data error, not a crash", () => {
    const input = join(dir, "density.json");
    writeFileSync(input, densityJson(3));
    const code = runFigure(
      "figure-density",
      renderDensityFromText,
      ["--input", input, "--out", join(dir, "d.svg"), "--bands", "bogus"],
      stderr,
    );
    expect(code).toBe(1);
    expect(errors.join("\n")).toMatch(/unknown band bogus/);
  });
});
