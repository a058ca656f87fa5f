import { describe, expect, it } from "vitest";

import { renderAnchorMapFromText } from "../src/anchor.js";
import { anchorJson, countOf } from "./helpers.js";

const OPTS = { dpi: 96, bands: [] as string[] };

describe("figure-anchor", () => {
  it("hatches uncovered cells instead of drawing them as zero", () => {
    const svg = renderAnchorMapFromText(anchorJson(), OPTS, "a.json");
    expect(countOf(svg, 'class="cell-missing"')).toBe(5);
    expect(countOf(svg, 'class="cell"')).toBe(3 * 5 - 5);
    expect(countOf(svg, 'fill="url(#missing)"')).toBeGreaterThanOrEqual(5);
  });

  it("labels every offset and marks offset zero", () => {
    const svg = renderAnchorMapFromText(anchorJson(), OPTS, "a.json");
    expect(countOf(svg, 'class="xtick"')).toBe(5);
    expect(svg).toContain('stroke-dasharray="2 3"');
  });

  it("reports the alignment coverage in the subtitle", () => {
    const svg = renderAnchorMapFromText(anchorJson(), OPTS, "a.json");
    expect(svg).toContain("aligned 3/2 sequences, excluded 1/2");
    expect(svg).toContain("12+");
  });

  it("is deterministic", () => {
    const a = renderAnchorMapFromText(anchorJson(), OPTS, "a.json");
    const b = renderAnchorMapFromText(anchorJson(), OPTS, "a.json");
    expect(a).toBe(b);
  });
});
