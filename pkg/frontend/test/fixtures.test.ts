/** End-to-end check against real files emitted by the analysis CLI, checked
 * in under fixtures/. Guards the parsers against drift between the
 * documented schemas and what the toolkit actually writes. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { renderAnchorMapFromText } from "../src/anchor.js";
import { renderDensityFromText } from "../src/density.js";
import { renderLayerProfileFromText } from "../src/layers.js";
import { renderParetoFromText } from "../src/pareto.js";
import { loadDensityReport, loadLayerProfile } from "../src/schema.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");
const OPTS = { dpi: 96, bands: [] as string[] };

function fixture(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf8");
}

describe("generated reports", () => {
  it("renders the layers report", () => {
    const text = fixture("layers.json");
    const entries = loadLayerProfile(text, "layers.json");
    const svg = renderLayerProfileFromText(text, OPTS, "layers.json");
    expect(entries.length).toBeGreaterThan(0);
    expect(svg).toContain('class="series-rho"');
  });

  it("renders the density report with its three bands", () => {
    const text = fixture("density.json");
    const report = loadDensityReport(text, "density.json");
    expect([...report.bands.keys()].sort()).toEqual(["early", "late", "middle"]);
    const svg = renderDensityFromText(text, OPTS, "density.json");
    const n = [...report.bands.values()].reduce((a, p) => a + p.total, 0);
    expect(svg).toContain(`N = ${n}`);
  });

  it("renders the anchor report", () => {
    const svg = renderAnchorMapFromText(fixture("anchor.json"), OPTS, "anchor.json");
    expect(svg).toContain("token offset from anchor");
  });

  it("renders the model summary scatter", () => {
    const svg = renderParetoFromText(fixture("summary.csv"), OPTS, "summary.csv");
    expect(svg).toContain('class="frontier"');
  });
});
