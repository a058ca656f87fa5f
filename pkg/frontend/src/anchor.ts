/** Anchor-aligned difference map: mean deep-share difference per (layer,
 * token offset) around an anchor's first token, diverging colors centered
 * on zero. Cells with no coverage are hatched as missing, never drawn as
 * zero. */

import { AnchorReport, loadAnchorReport } from "./schema.js";
import {
  Box,
  divergingColor,
  frame,
  hatchDef,
  line,
  linearScale,
  rect,
  RenderOptions,
  serialize,
  text,
} from "./svg.js";

export function renderAnchorMap(report: AnchorReport, opts: RenderOptions): string {
  const cols = report.offsets.length;
  const rows = report.nLayers;
  const cell = Math.max(16, Math.min(34, Math.floor(420 / Math.max(cols, rows))));
  const gridW = cols * cell;
  const gridH = rows * cell;
  const left = 64;
  const top = 52;
  const f = frame(left + gridW + 96, top + gridH + 76);
  f.defs.push(hatchDef("missing"));

  let amp = 0;
  for (const row of report.diff) {
    for (const v of row) if (v !== null) amp = Math.max(amp, Math.abs(v));
  }
  if (amp === 0) amp = 1;

  text(f, left, 22, `Deep-share difference around anchor ${JSON.stringify(report.anchor)}`, {
    size: 13,
  });
  text(
    f,
    left,
    38,
    `aligned ${report.alignedA}/${report.alignedB} sequences, excluded ${report.excludedA}/${report.excludedB}`,
    { size: 10, fill: "#555" },
  );

  for (let li = 0; li < rows; li++) {
    const rowVals = report.diff[li] as (number | null)[];
    const y = top + gridH - (li + 1) * cell;
    for (let oi = 0; oi < cols; oi++) {
      const v = rowVals[oi] as number | null;
      const x = left + oi * cell;
      if (v === null) {
        rect(f, x, y, cell, cell, "url(#missing)", { stroke: "#ddd", cls: "cell-missing" });
      } else {
        const t = 0.5 + v / (2 * amp);
        rect(f, x, y, cell, cell, divergingColor(t), { stroke: "#fff", cls: "cell" });
      }
    }
    text(f, left - 6, y + cell / 2 + 3.5, String(li), { anchor: "end", size: 9, cls: "ytick" });
  }

  report.offsets.forEach((off, oi) => {
    const x = left + oi * cell + cell / 2;
    text(f, x, top + gridH + 14, String(off), { anchor: "middle", size: 9, cls: "xtick" });
  });
  const zeroIdx = report.offsets.indexOf(0);
  if (zeroIdx >= 0) {
    const x = left + zeroIdx * cell + cell / 2;
    line(f, x, top - 4, x, top + gridH, "#222", 1, "2 3");
  }
  text(f, left + gridW / 2, top + gridH + 32, "token offset from anchor", {
    anchor: "middle",
    size: 11,
  });
  text(f, left - 40, top + gridH / 2, "layer", { anchor: "middle", size: 11, rotate: -90 });

  const cbBox: Box = { x: left + gridW + 18, y: top, w: 14, h: gridH };
  const steps = 24;
  for (let i = 0; i < steps; i++) {
    const t = 1 - i / (steps - 1);
    rect(f, cbBox.x, cbBox.y + (i * cbBox.h) / steps, cbBox.w, cbBox.h / steps + 0.5, divergingColor(t));
  }
  f.body.push(
    `<rect x="${cbBox.x}" y="${cbBox.y}" width="${cbBox.w}" height="${cbBox.h}" ` +
      `fill="none" stroke="#222" stroke-width="0.5"/>`,
  );
  text(f, cbBox.x + 18, cbBox.y + 8, `+${amp.toPrecision(2)}`, { size: 9 });
  text(f, cbBox.x + 18, cbBox.y + cbBox.h / 2 + 3, "0", { size: 9 });
  text(f, cbBox.x + 18, cbBox.y + cbBox.h, `-${amp.toPrecision(2)}`, { size: 9 });
  rect(f, cbBox.x, cbBox.y + cbBox.h + 12, 14, 10, "url(#missing)", { stroke: "#ddd" });
  text(f, cbBox.x + 18, cbBox.y + cbBox.h + 20, "missing", { size: 9 });

  return serialize(f, opts.dpi);
}

export function renderAnchorMapFromText(text0: string, opts: RenderOptions, path0: string): string {
  return renderAnchorMap(loadAnchorReport(text0, path0), opts);
}
