import type { ResultRow, RunSummary } from "./schema.js";
import { esc, px, rampColor, NO_DATA_COLOR, svgDocument } from "./svg.js";

export interface HeatmapOptions {
  // color scale upper bound in meters, or "auto" to span the data
  scaleMax?: number | "auto";
}

export const DEFAULT_SCALE_MAX = 2.5;

const PX_PER_M = 70;
const MARGIN = { left: 58, right: 150, top: 42, bottom: 50 };
const COLORBAR_SEGMENTS = 50;

function inferStep(values: number[]): number {
  let step = Infinity;
  for (let i = 1; i < values.length; i++) {
    const d = values[i] - values[i - 1];
    if (d > 1e-9 && d < step) step = d;
  }
  return Number.isFinite(step) ? step : 1.0;
}

export function renderHeatmap(
  rows: ResultRow[],
  summary: RunSummary,
  modulation: string,
  options: HeatmapOptions = {},
): string {
  const points = rows.filter((r) => r.modulation === modulation);
  if (points.length === 0) throw new Error(`no rows for modulation "${modulation}"`);
  const [roomL, roomW] = summary.room;

  const xs = [...new Set(points.map((p) => p.xTrue))].sort((a, b) => a - b);
  const ys = [...new Set(points.map((p) => p.yTrue))].sort((a, b) => a - b);
  const step = Math.min(inferStep(xs), inferStep(ys));

  let scaleMax: number;
  if (options.scaleMax === "auto") {
    const finite = points.map((p) => p.errorM).filter(Number.isFinite);
    scaleMax = finite.length > 0 ? Math.max(...finite) : DEFAULT_SCALE_MAX;
    if (scaleMax <= 0) scaleMax = 1.0;
  } else {
    scaleMax = options.scaleMax ?? DEFAULT_SCALE_MAX;
  }

  const plotW = roomL * PX_PER_M;
  const plotH = roomW * PX_PER_M;
  const width = MARGIN.left + plotW + MARGIN.right;
  const height = MARGIN.top + plotH + MARGIN.bottom;
  const X = (m: number) => MARGIN.left + m * PX_PER_M;
  const Y = (m: number) => MARGIN.top + (roomW - m) * PX_PER_M;

  let body = "";
  body += `<text x="${px(MARGIN.left + plotW / 2)}" y="24" font-size="16" text-anchor="middle">` +
    `${esc(modulation)} positioning error</text>\n`;

  body += '<g shape-rendering="crispEdges">\n';
  for (const p of points) {
    const x0 = Math.max(0, p.xTrue - step / 2);
    const x1 = Math.min(roomL, p.xTrue + step / 2);
    const y0 = Math.max(0, p.yTrue - step / 2);
    const y1 = Math.min(roomW, p.yTrue + step / 2);
    const fill = Number.isFinite(p.errorM) ? rampColor(p.errorM / scaleMax) : NO_DATA_COLOR;
    body += `<rect class="cell" x="${px(X(x0))}" y="${px(Y(y1))}" ` +
      `width="${px((x1 - x0) * PX_PER_M)}" height="${px((y1 - y0) * PX_PER_M)}" fill="${fill}"/>\n`;
  }
  body += "</g>\n";

  // axes with ticks every meter
  body += `<rect x="${px(X(0))}" y="${px(Y(roomW))}" width="${px(plotW)}" height="${px(plotH)}" ` +
    'fill="none" stroke="#333" stroke-width="1"/>\n';
  for (let m = 0; m <= Math.floor(roomL + 1e-9); m++) {
    body += `<line x1="${px(X(m))}" y1="${px(Y(0))}" x2="${px(X(m))}" y2="${px(Y(0) + 5)}" stroke="#333"/>\n`;
    body += `<text x="${px(X(m))}" y="${px(Y(0) + 18)}" font-size="11" text-anchor="middle">${m}</text>\n`;
  }
  for (let m = 0; m <= Math.floor(roomW + 1e-9); m++) {
    body += `<line x1="${px(X(0) - 5)}" y1="${px(Y(m))}" x2="${px(X(0))}" y2="${px(Y(m))}" stroke="#333"/>\n`;
    body += `<text x="${px(X(0) - 9)}" y="${px(Y(m) + 4)}" font-size="11" text-anchor="end">${m}</text>\n`;
  }
  body += `<text x="${px(MARGIN.left + plotW / 2)}" y="${px(height - 12)}" font-size="12" ` +
    'text-anchor="middle">x (m)</text>\n';
  body += `<text x="16" y="${px(MARGIN.top + plotH / 2)}" font-size="12" text-anchor="middle" ` +
    `transform="rotate(-90 16 ${px(MARGIN.top + plotH / 2)})">y (m)</text>\n`;

  // transmitter positions
  for (const [ax, ay] of summary.anchors) {
    body += `<circle class="led" cx="${px(X(ax))}" cy="${px(Y(ay))}" r="5" ` +
      'fill="white" stroke="black" stroke-width="1.5"/>\n';
    body += `<text x="${px(X(ax))}" y="${px(Y(ay) - 9)}" font-size="10" text-anchor="middle">LED</text>\n`;
  }

  // colorbar
  const barX = MARGIN.left + plotW + 36;
  const segH = plotH / COLORBAR_SEGMENTS;
  body += '<g shape-rendering="crispEdges">\n';
  for (let i = 0; i < COLORBAR_SEGMENTS; i++) {
    // segment 0 is the top of the bar, i.e. the scale maximum
    const t = 1 - i / (COLORBAR_SEGMENTS - 1);
    body += `<rect x="${px(barX)}" y="${px(MARGIN.top + i * segH)}" width="14" height="${px(segH + 0.5)}" ` +
      `fill="${rampColor(t)}"/>\n`;
  }
  body += "</g>\n";
  body += `<rect x="${px(barX)}" y="${px(MARGIN.top)}" width="14" height="${px(plotH)}" ` +
    'fill="none" stroke="#333" stroke-width="1"/>\n';
  for (const frac of [0, 0.5, 1]) {
    const y = MARGIN.top + (1 - frac) * plotH;
    body += `<line x1="${px(barX + 14)}" y1="${px(y)}" x2="${px(barX + 19)}" y2="${px(y)}" stroke="#333"/>\n`;
    body += `<text class="scale" x="${px(barX + 23)}" y="${px(y + 4)}" font-size="11">` +
      `${(frac * scaleMax).toFixed(2)}</text>\n`;
  }
  body += `<text x="${px(barX + 7)}" y="${px(MARGIN.top - 10)}" font-size="11" text-anchor="middle">error (m)</text>\n`;

  return svgDocument(width, height, body);
}
