// Small helpers shared by the SVG renderers. Output must be byte-stable, so
// every coordinate goes through fixed-precision formatting and nothing reads
// the clock or RNG.

export function px(value: number): string {
  // avoid "-0.00"
  const s = value.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

const RAMP: Array<[number, [number, number, number]]> = [
  [0.0, [68, 1, 84]],
  [0.25, [59, 82, 139]],
  [0.5, [33, 145, 140]],
  [0.75, [94, 201, 98]],
  [1.0, [253, 231, 37]],
];

export function rampColor(t: number): string {
  const u = Math.min(1, Math.max(0, t));
  for (let i = 1; i < RAMP.length; i++) {
    const [t1, c1] = RAMP[i];
    if (u <= t1) {
      const [t0, c0] = RAMP[i - 1];
      const w = (u - t0) / (t1 - t0);
      const rgb = c0.map((c, k) => Math.round(c + w * (c1[k] - c)));
      return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
    }
  }
  return "rgb(253,231,37)";
}

// fill for grid points whose position estimate failed
export const NO_DATA_COLOR = "rgb(176,176,176)";

export function svgDocument(width: number, height: number, body: string): string {
  const head =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n`;
  return head + body + "</svg>\n";
}
