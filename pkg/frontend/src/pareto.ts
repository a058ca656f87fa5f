/** Parameter-count versus bits-per-byte scatter with the non-dominated
 * frontier drawn as a dashed staircase. Input rows come from the model
 * summary table (label, family, params, bpb). */

import { loadParetoTable, ParetoPoint } from "./schema.js";
import {
  Box,
  circle,
  FAMILY_COLORS,
  fmt,
  frame,
  line,
  linearScale,
  padded,
  path,
  px,
  RenderOptions,
  serialize,
  text,
  ticks,
  xAxis,
  yAxis,
} from "./svg.js";

/** Points not strictly improved on in both coordinates, by ascending params. */
export function paretoFrontier(points: ParetoPoint[]): ParetoPoint[] {
  const sorted = [...points].sort((a, b) => a.params - b.params || a.bpb - b.bpb);
  const front: ParetoPoint[] = [];
  let best = Infinity;
  for (const p of sorted) {
    if (p.bpb < best) {
      front.push(p);
      best = p.bpb;
    }
  }
  return front;
}

function paramsLabel(v: number): string {
  if (v >= 1e9) return `${fmt(v / 1e9)}B`;
  if (v >= 1e6) return `${fmt(v / 1e6)}M`;
  return fmt(v);
}

export function renderPareto(points: ParetoPoint[], opts: RenderOptions): string {
  const f = frame(640, 420);
  const box: Box = { x: 72, y: 40, w: 640 - 72 - 150, h: 420 - 40 - 72 };

  const [xlo, xhi] = padded(
    Math.min(...points.map((p) => p.params)),
    Math.max(...points.map((p) => p.params)),
  );
  const [ylo, yhi] = padded(
    Math.min(...points.map((p) => p.bpb)),
    Math.max(...points.map((p) => p.bpb)),
  );
  const sx = linearScale(xlo, xhi, box.x, box.x + box.w);
  const sy = linearScale(ylo, yhi, box.y + box.h, box.y);

  const families: string[] = [];
  for (const p of points) if (!families.includes(p.family)) families.push(p.family);
  const colorOf = (family: string) =>
    FAMILY_COLORS[families.indexOf(family) % FAMILY_COLORS.length] as string;

  const front = paretoFrontier(points);
  if (front.length > 1) {
    const parts: string[] = [];
    front.forEach((p, i) => {
      const x = sx(p.params);
      const y = sy(p.bpb);
      if (i === 0) {
        parts.push(`M${px(x)} ${px(y)}`);
      } else {
        const prev = front[i - 1] as ParetoPoint;
        parts.push(`L${px(x)} ${px(sy(prev.bpb))}L${px(x)} ${px(y)}`);
      }
    });
    path(f, parts.join(""), "#888", 1.2, "4 3", "frontier");
  }

  for (const p of points) {
    circle(f, sx(p.params), sy(p.bpb), 4, colorOf(p.family), "point");
    text(f, sx(p.params) + 6, sy(p.bpb) - 5, p.label, { size: 8.5, fill: "#444", cls: "point-label" });
  }

  xAxis(f, box, sx, ticks(xlo, xhi, 5), "parameters", paramsLabel);
  yAxis(f, box, sy, ticks(ylo, yhi, 6), "bits per byte");
  text(f, box.x, 24, "Quality versus size", { size: 13 });

  families.forEach((family, i) => {
    const lx = box.x + box.w + 18;
    const ly = box.y + 10 + i * 18;
    circle(f, lx, ly - 3, 4, colorOf(family));
    text(f, lx + 10, ly, family, { size: 10, cls: "legend" });
  });
  if (front.length > 1) {
    const ly = box.y + 10 + families.length * 18;
    line(f, box.x + box.w + 12, ly - 3, box.x + box.w + 24, ly - 3, "#888", 1.2, "4 3");
    text(f, box.x + box.w + 28, ly, "frontier", { size: 10, cls: "legend" });
  }

  return serialize(f, opts.dpi);
}

export function renderParetoFromText(text0: string, opts: RenderOptions, path0: string): string {
  return renderPareto(loadParetoTable(text0, path0), opts);
}
