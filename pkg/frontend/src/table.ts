import type { ModulationSummary, RunSummary } from "./schema.js";

// row label -> accessor; the five headline statistics of a sweep
const ROWS: Array<[string, (s: ModulationSummary) => number | null]> = [
  ["Corner", (s) => s.cornerErr],
  ["Edge", (s) => s.edgeErr],
  ["Center", (s) => s.centerErr],
  ["RMS-rect", (s) => s.rmsRect],
  ["RMS-whole", (s) => s.rmsWhole],
];

function formatMeters(value: number | null): string {
  if (value === null) return "n/a";
  if (value > 0 && value < 0.0005) return value.toExponential(2);
  return value.toFixed(3);
}

export function renderSummaryTable(summary: RunSummary): string {
  const names = Object.keys(summary.modulations).sort();
  const header = ["metric (m)", ...names];
  const grid = ROWS.map(([label, pick]) => [
    label,
    ...names.map((n) => formatMeters(pick(summary.modulations[n]))),
  ]);
  const widths = header.map((h, col) => Math.max(h.length, ...grid.map((row) => row[col].length)));
  const renderRow = (cells: string[]) =>
    cells
      .map((cell, col) => (col === 0 ? cell.padEnd(widths[col]) : cell.padStart(widths[col])))
      .join("  ")
      .trimEnd();
  const lines = [renderRow(header), ...grid.map(renderRow)];
  return lines.join("\n") + "\n";
}
