/** Gate-density figure: one joint (g_w, g_d) count heatmap per layer band,
 * all panels on a shared color scale, with a colorbar annotated by the
 * total record count it covers. */

import { DensityPanel, DensityReport, loadDensityReport, SchemaError } from "./schema.js";
import {
  Box,
  colorbar,
  densityColor,
  frame,
  linearScale,
  rect,
  RenderOptions,
  serialize,
  text,
  xAxis,
  yAxis,
} from "./svg.js";

const PANEL = 170;
const GAP = 26;
const LEFT = 58;
const TOP = 46;
const BOTTOM = 64;

export function selectBands(report: DensityReport, requested: string[]): [string, DensityPanel][] {
  const names = requested.length ? requested : [...report.bands.keys()];
  return names.map((name) => {
    const panel = report.bands.get(name);
    if (!panel) {
      const have = [...report.bands.keys()].join(", ");
      throw new SchemaError(`unknown band ${name} (report has: ${have})`);
    }
    return [name, panel];
  });
}

function bandLabel(name: string, panel: DensityPanel): string {
  const ls = panel.layers;
  const span =
    ls.length > 1 ? `L${Math.min(...ls)}–${Math.max(...ls)}` : `L${ls[0] ?? 0}`;
  return `${name} (${span}, N=${panel.total})`;
}

export function renderDensity(report: DensityReport, opts: RenderOptions): string {
  const panels = selectBands(report, opts.bands);
  const width = LEFT + panels.length * (PANEL + GAP) + 64;
  const f = frame(width, TOP + PANEL + BOTTOM);
  f.defs.push(
    `<pattern id="empty-cell" width="4" height="4" patternUnits="userSpaceOnUse">` +
      `<rect width="4" height="4" fill="#fbfbfb"/></pattern>`,
  );

  let maxCount = 1;
  let totalN = 0;
  for (const [, panel] of panels) {
    for (const row of panel.gateCounts) for (const c of row) maxCount = Math.max(maxCount, c);
    totalN += panel.total;
  }

  text(f, LEFT, 24, "Joint routing-gate density by layer band", { size: 13 });

  panels.forEach(([name, panel], pi) => {
    const box: Box = { x: LEFT + pi * (PANEL + GAP), y: TOP, w: PANEL, h: PANEL };
    const bins = panel.bins;
    const cell = PANEL / bins;
    for (let i = 0; i < bins; i++) {
      for (let j = 0; j < bins; j++) {
        const count = (panel.gateCounts[i] as number[])[j] as number;
        const x = box.x + i * cell;
        const y = box.y + PANEL - (j + 1) * cell;
        const fill = count === 0 ? "url(#empty-cell)" : densityColor(count / maxCount);
        rect(f, x, y, cell + 0.3, cell + 0.3, fill, { cls: "cell" });
      }
    }
    const sx = linearScale(0, 1, box.x, box.x + box.w);
    const sy = linearScale(0, 1, box.y + box.h, box.y);
    xAxis(f, box, sx, [0, 0.5, 1], "wide gate g_w");
    if (pi === 0) {
      yAxis(f, box, sy, [0, 0.5, 1], "deep gate g_d");
    }
    text(f, box.x + box.w / 2, TOP - 8, bandLabel(name, panel), {
      anchor: "middle",
      size: 11,
      cls: "band-title",
    });
  });

  const cbBox: Box = { x: LEFT + panels.length * (PANEL + GAP) + 6, y: TOP, w: 14, h: PANEL };
  colorbar(f, cbBox, maxCount, densityColor, `N = ${totalN}`);

  return serialize(f, opts.dpi);
}

export function renderDensityFromText(text0: string, opts: RenderOptions, path0: string): string {
  return renderDensity(loadDensityReport(text0, path0), opts);
}
