import type { ResultRow } from "./schema.js";
import { esc, px, svgDocument } from "./svg.js";

export const BIN_WIDTH_M = 0.05;
export const BIN_MAX_M = 3.0;

const PLOT_W = 440;
const PLOT_H = 220;
const MARGIN = { left: 52, right: 46, top: 42, bottom: 50 };
const BAR_FILL = "rgb(59,82,139)";
const OVERFLOW_FILL = "rgb(170,51,17)";

export interface ErrorHistogram {
  counts: number[]; // errors in [i*width, (i+1)*width)
  overflow: number; // errors at or beyond the last edge
  skipped: number; // rows without a position fix
}

export function binErrors(rows: ResultRow[], modulation: string): ErrorHistogram {
  const nBins = Math.round(BIN_MAX_M / BIN_WIDTH_M);
  const counts = new Array<number>(nBins).fill(0);
  let overflow = 0;
  let skipped = 0;
  for (const row of rows) {
    if (row.modulation !== modulation) continue;
    if (!Number.isFinite(row.errorM)) {
      skipped += 1;
    } else if (row.errorM >= BIN_MAX_M) {
      overflow += 1;
    } else {
      counts[Math.floor(row.errorM / BIN_WIDTH_M)] += 1;
    }
  }
  return { counts, overflow, skipped };
}

function tickStep(maxCount: number): number {
  for (const step of [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000]) {
    if (maxCount / step <= 6) return step;
  }
  return 10000;
}

export function renderHistogram(rows: ResultRow[], modulation: string): string {
  const hist = binErrors(rows, modulation);
  const total = hist.counts.reduce((a, b) => a + b, 0) + hist.overflow;
  if (total + hist.skipped === 0) throw new Error(`no rows for modulation "${modulation}"`);

  const nBins = hist.counts.length;
  const overflowSlot = hist.overflow > 0 ? 18 : 0;
  const width = MARGIN.left + PLOT_W + overflowSlot + MARGIN.right;
  const height = MARGIN.top + PLOT_H + MARGIN.bottom;
  const barW = PLOT_W / nBins;
  const maxCount = Math.max(1, ...hist.counts, hist.overflow);
  const X = (bin: number) => MARGIN.left + bin * barW;
  const Y = (count: number) => MARGIN.top + PLOT_H * (1 - count / maxCount);

  let body = "";
  body += `<text x="${px(MARGIN.left + PLOT_W / 2)}" y="24" font-size="16" text-anchor="middle">` +
    `${esc(modulation)} error histogram</text>\n`;

  body += '<g shape-rendering="crispEdges">\n';
  for (let i = 0; i < nBins; i++) {
    if (hist.counts[i] === 0) continue;
    body += `<rect class="bar" x="${px(X(i))}" y="${px(Y(hist.counts[i]))}" ` +
      `width="${px(barW)}" height="${px(PLOT_H - (Y(hist.counts[i]) - MARGIN.top))}" fill="${BAR_FILL}"/>\n`;
  }
  if (hist.overflow > 0) {
    body += `<rect class="bar overflow" x="${px(X(nBins) + 4)}" y="${px(Y(hist.overflow))}" ` +
      `width="${px(barW)}" height="${px(PLOT_H - (Y(hist.overflow) - MARGIN.top))}" fill="${OVERFLOW_FILL}"/>\n`;
  }
  body += "</g>\n";

  // axes: x in meters every 0.5 m, y in counts
  body += `<line x1="${px(MARGIN.left)}" y1="${px(MARGIN.top + PLOT_H)}" ` +
    `x2="${px(MARGIN.left + PLOT_W + overflowSlot)}" y2="${px(MARGIN.top + PLOT_H)}" stroke="#333"/>\n`;
  body += `<line x1="${px(MARGIN.left)}" y1="${px(MARGIN.top)}" ` +
    `x2="${px(MARGIN.left)}" y2="${px(MARGIN.top + PLOT_H)}" stroke="#333"/>\n`;
  for (let m = 0; m <= BIN_MAX_M + 1e-9; m += 0.5) {
    const x = MARGIN.left + (m / BIN_MAX_M) * PLOT_W;
    body += `<line x1="${px(x)}" y1="${px(MARGIN.top + PLOT_H)}" x2="${px(x)}" y2="${px(MARGIN.top + PLOT_H + 5)}" stroke="#333"/>\n`;
    body += `<text x="${px(x)}" y="${px(MARGIN.top + PLOT_H + 18)}" font-size="11" text-anchor="middle">${m.toFixed(1)}</text>\n`;
  }
  if (hist.overflow > 0) {
    body += `<text x="${px(X(nBins) + 4 + barW / 2)}" y="${px(MARGIN.top + PLOT_H + 18)}" ` +
      `font-size="11" text-anchor="middle">&gt;${BIN_MAX_M.toFixed(0)}</text>\n`;
  }
  const step = tickStep(maxCount);
  for (let c = 0; c <= maxCount; c += step) {
    body += `<line x1="${px(MARGIN.left - 5)}" y1="${px(Y(c))}" x2="${px(MARGIN.left)}" y2="${px(Y(c))}" stroke="#333"/>\n`;
    body += `<text x="${px(MARGIN.left - 9)}" y="${px(Y(c) + 4)}" font-size="11" text-anchor="end">${c}</text>\n`;
  }
  body += `<text x="${px(MARGIN.left + PLOT_W / 2)}" y="${px(height - 12)}" font-size="12" ` +
    'text-anchor="middle">error (m)</text>\n';
  body += `<text x="16" y="${px(MARGIN.top + PLOT_H / 2)}" font-size="12" text-anchor="middle" ` +
    `transform="rotate(-90 16 ${px(MARGIN.top + PLOT_H / 2)})">points</text>\n`;
  if (hist.skipped > 0) {
    body += `<text x="${px(MARGIN.left + PLOT_W)}" y="${px(MARGIN.top - 10)}" font-size="11" ` +
      `text-anchor="end">${hist.skipped} without fix</text>\n`;
  }

  return svgDocument(width, height, body);
}
