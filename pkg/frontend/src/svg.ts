/** Shared SVG assembly: deterministic number formatting, linear scales,
 * tick placement, and the two color ramps the figures use. Everything is a
 * pure string builder; rendering the same input twice yields the same
 * bytes. */

export interface RenderOptions {
  dpi: number;
  bands: string[];
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Coordinate format: fixed two decimals keeps output stable and small. */
export function px(v: number): string {
  const r = Math.round(v * 100) / 100;
  return Object.is(r, -0) ? "0" : String(r);
}

/** Tick-label format: up to four significant digits, no trailing zeros. */
export function fmt(v: number): string {
  if (v === 0) return "0";
  if (!Number.isFinite(v)) return String(v);
  const a = Math.abs(v);
  if (a >= 1e6 || a < 1e-4) return v.toExponential(2).replace("e+", "e");
  const r = Number(v.toPrecision(4));
  return String(r);
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = [d0, d1];
  f.range = [r0, r1];
  return f;
}

/** Round tick positions covering [lo, hi] at a 1/2/5 step. */
export function ticks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) return [lo];
  const raw = (hi - lo) / Math.max(1, target);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  }
  const out: number[] = [];
  const start = Math.ceil(lo / step) * step;
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : Number(v.toPrecision(12)));
  }
  return out;
}

/** Pad a [lo, hi] interval by a fraction on both sides (never collapses). */
export function padded(lo: number, hi: number, frac = 0.06): [number, number] {
  if (!(hi > lo)) {
    const eps = Math.abs(lo) > 0 ? Math.abs(lo) * 0.1 : 1;
    return [lo - eps, hi + eps];
  }
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

// ---------------------------------------------------------------------------
// color ramps

type Stop = [number, number, number];

const DENSITY_STOPS: Stop[] = [
  [68, 1, 84],
  [59, 82, 139],
  [33, 145, 140],
  [94, 201, 98],
  [253, 231, 37],
];

function lerpStops(stops: Stop[], t: number): string {
  const u = Math.min(1, Math.max(0, t)) * (stops.length - 1);
  const i = Math.min(stops.length - 2, Math.floor(u));
  const f = u - i;
  const a = stops[i] as Stop;
  const b = stops[i + 1] as Stop;
  const c = a.map((av, j) => Math.round(av + (b[j] as number - av) * f));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

/** Sequential ramp for count heatmaps (dark low, bright high). */
export function densityColor(t: number): string {
  return lerpStops(DENSITY_STOPS, t);
}

const DIVERGING_STOPS: Stop[] = [
  [33, 102, 172],
  [146, 197, 222],
  [247, 247, 247],
  [244, 165, 130],
  [178, 24, 43],
];

/** Diverging ramp for signed difference maps; t=0.5 is neutral. */
export function divergingColor(t: number): string {
  return lerpStops(DIVERGING_STOPS, t);
}

/** Fixed palette for categorical families, cycled in first-seen order. */
export const FAMILY_COLORS = [
  "#4477aa",
  "#ee6677",
  "#228833",
  "#ccbb44",
  "#66ccee",
  "#aa3377",
  "#bbbbbb",
];

// ---------------------------------------------------------------------------
// document assembly

export interface Frame {
  width: number;
  height: number;
  body: string[];
  defs: string[];
}

export function frame(width: number, height: number): Frame {
  return { width, height, body: [], defs: [] };
}

/** Hatched-pattern def for cells that are missing, not zero. */
export function hatchDef(id = "missing"): string {
  return (
    `<pattern id="${id}" width="6" height="6" patternUnits="userSpaceOnUse" ` +
    `patternTransform="rotate(45)">` +
    `<rect width="6" height="6" fill="#f4f4f4"/>` +
    `<line x1="0" y1="0" x2="0" y2="6" stroke="#b0b0b0" stroke-width="2"/>` +
    `</pattern>`
  );
}

/** Serialize at a pixel density: the viewBox keeps the logical size, the
 * width/height attributes carry dpi (96 css px per inch). */
export function serialize(f: Frame, dpi: number): string {
  const w = Math.round((f.width * dpi) / 96);
  const h = Math.round((f.height * dpi) / 96);
  const defs = f.defs.length ? `<defs>${f.defs.join("")}</defs>` : "";
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" ` +
    `viewBox="0 0 ${f.width} ${f.height}" font-family="Helvetica, Arial, sans-serif">` +
    `${defs}<rect width="${f.width}" height="${f.height}" fill="white"/>` +
    `${f.body.join("")}</svg>\n`
  );
}

export function text(
  f: Frame,
  x: number,
  y: number,
  s: string,
  opts: { size?: number; anchor?: string; fill?: string; cls?: string; rotate?: number } = {},
): void {
  const size = opts.size ?? 11;
  const anchor = opts.anchor ?? "start";
  const fill = opts.fill ?? "#222";
  const cls = opts.cls ? ` class="${opts.cls}"` : "";
  const transform = opts.rotate ? ` transform="rotate(${opts.rotate} ${px(x)} ${px(y)})"` : "";
  f.body.push(
    `<text x="${px(x)}" y="${px(y)}" font-size="${size}" text-anchor="${anchor}" ` +
      `fill="${fill}"${cls}${transform}>${esc(s)}</text>`,
  );
}

export function line(
  f: Frame,
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  stroke = "#222",
  width = 1,
  dash?: string,
): void {
  const d = dash ? ` stroke-dasharray="${dash}"` : "";
  f.body.push(
    `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}" ` +
      `stroke="${stroke}" stroke-width="${width}"${d}/>`,
  );
}

export function rect(
  f: Frame,
  x: number,
  y: number,
  w: number,
  h: number,
  fill: string,
  opts: { stroke?: string; cls?: string } = {},
): void {
  const stroke = opts.stroke ? ` stroke="${opts.stroke}"` : "";
  const cls = opts.cls ? ` class="${opts.cls}"` : "";
  f.body.push(
    `<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(h)}" ` +
      `fill="${fill}"${stroke}${cls}/>`,
  );
}

export function circle(f: Frame, cx: number, cy: number, r: number, fill: string, cls?: string): void {
  const c = cls ? ` class="${cls}"` : "";
  f.body.push(`<circle cx="${px(cx)}" cy="${px(cy)}" r="${px(r)}" fill="${fill}"${c}/>`);
}

export function path(f: Frame, d: string, stroke: string, width = 1.5, dash?: string, cls?: string): void {
  const dd = dash ? ` stroke-dasharray="${dash}"` : "";
  const c = cls ? ` class="${cls}"` : "";
  f.body.push(`<path d="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"${dd}${c}/>`);
}

/** Polyline path data that breaks at null points instead of bridging them. */
export function brokenPath(points: (readonly [number, number] | null)[]): string {
  const parts: string[] = [];
  let pen = false;
  for (const p of points) {
    if (p === null) {
      pen = false;
      continue;
    }
    parts.push(`${pen ? "L" : "M"}${px(p[0])} ${px(p[1])}`);
    pen = true;
  }
  return parts.join("");
}

// ---------------------------------------------------------------------------
// axes

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function xAxis(
  f: Frame,
  box: Box,
  scale: Scale,
  values: number[],
  label?: string,
  format: (v: number) => string = fmt,
): void {
  const y = box.y + box.h;
  line(f, box.x, y, box.x + box.w, y, "#222", 1);
  for (const v of values) {
    const x = scale(v);
    line(f, x, y, x, y + 4, "#222", 1);
    text(f, x, y + 16, format(v), { anchor: "middle", size: 10, cls: "xtick" });
  }
  if (label) {
    text(f, box.x + box.w / 2, y + 32, label, { anchor: "middle", size: 11 });
  }
}

export function yAxis(
  f: Frame,
  box: Box,
  scale: Scale,
  values: number[],
  label?: string,
  format: (v: number) => string = fmt,
): void {
  line(f, box.x, box.y, box.x, box.y + box.h, "#222", 1);
  for (const v of values) {
    const y = scale(v);
    line(f, box.x - 4, y, box.x, y, "#222", 1);
    text(f, box.x - 7, y + 3.5, format(v), { anchor: "end", size: 10, cls: "ytick" });
  }
  if (label) {
    text(f, box.x - 38, box.y + box.h / 2, label, {
      anchor: "middle",
      size: 11,
      rotate: -90,
    });
  }
}

/** Vertical colorbar; the annotation line carries the total record count. */
export function colorbar(
  f: Frame,
  box: Box,
  maxValue: number,
  color: (t: number) => string,
  annotation?: string,
): void {
  const steps = 24;
  for (let i = 0; i < steps; i++) {
    const t = 1 - i / (steps - 1);
    rect(f, box.x, box.y + (i * box.h) / steps, box.w, box.h / steps + 0.5, color(t));
  }
  f.body.push(
    `<rect x="${px(box.x)}" y="${px(box.y)}" width="${px(box.w)}" height="${px(box.h)}" ` +
      `fill="none" stroke="#222" stroke-width="0.5"/>`,
  );
  text(f, box.x + box.w + 4, box.y + 8, fmt(maxValue), { size: 9 });
  text(f, box.x + box.w + 4, box.y + box.h, "0", { size: 9 });
  if (annotation) {
    text(f, box.x + box.w / 2, box.y + box.h + 16, annotation, {
      anchor: "middle",
      size: 10,
      cls: "colorbar-note",
    });
  }
}
