/** Layer-profile figure: per-layer mean deep share and update-vector cosine
 * as two lines over layer index, one x-tick per layer. Layers with no
 * records break the lines rather than plotting zeros. */

import { LayerEntry, loadLayerProfile } from "./schema.js";
import {
  Box,
  brokenPath,
  circle,
  frame,
  line,
  linearScale,
  padded,
  path,
  RenderOptions,
  serialize,
  text,
  ticks,
  xAxis,
  yAxis,
} from "./svg.js";

export type { RenderOptions };

export function renderLayerProfile(entries: LayerEntry[], opts: RenderOptions): string {
  const f = frame(640, 400);
  const box: Box = { x: 64, y: 40, w: 640 - 64 - 24, h: 400 - 40 - 72 };

  const layers = entries.map((e) => e.layer);
  const values: number[] = [];
  for (const e of entries) {
    if (e.meanRhoD !== null) values.push(e.meanRhoD);
    if (e.meanCosDw !== null) values.push(e.meanCosDw);
  }
  const lo = Math.min(0, ...values);
  const hi = Math.max(1, ...values);
  const [ylo, yhi] = padded(lo, hi);

  const sx = linearScale(Math.min(...layers), Math.max(...layers), box.x, box.x + box.w);
  const sy = linearScale(ylo, yhi, box.y + box.h, box.y);

  for (const ref of [0, 0.5]) {
    if (ref > ylo && ref < yhi) {
      line(f, box.x, sy(ref), box.x + box.w, sy(ref), "#d8d8d8", 1, "3 3");
    }
  }

  const rhoPts = entries.map((e) =>
    e.meanRhoD === null ? null : ([sx(e.layer), sy(e.meanRhoD)] as const),
  );
  const cosPts = entries.map((e) =>
    e.meanCosDw === null ? null : ([sx(e.layer), sy(e.meanCosDw)] as const),
  );
  path(f, brokenPath(rhoPts), "#4477aa", 2, undefined, "series-rho");
  path(f, brokenPath(cosPts), "#ee6677", 2, undefined, "series-cos");
  for (const p of rhoPts) if (p) circle(f, p[0], p[1], 2.6, "#4477aa", "pt-rho");
  for (const p of cosPts) if (p) circle(f, p[0], p[1], 2.6, "#ee6677", "pt-cos");

  xAxis(f, box, sx, layers, "layer", (v) => String(v));
  yAxis(f, box, sy, ticks(ylo, yhi, 6), "mean per layer");

  text(f, box.x, 24, "Deep share and path alignment by layer", { size: 13 });
  const lx = box.x + box.w - 190;
  line(f, lx, 28, lx + 22, 28, "#4477aa", 2);
  text(f, lx + 26, 31, "deep share ρ_d", { size: 10 });
  line(f, lx + 110, 28, lx + 132, 28, "#ee6677", 2);
  text(f, lx + 136, 31, "cos(Δd, Δw)", { size: 10 });

  return serialize(f, opts.dpi);
}

export function renderLayerProfileFromText(text0: string, opts: RenderOptions, path0: string): string {
  return renderLayerProfile(loadLayerProfile(text0, path0), opts);
}
