import fs from "node:fs";
import path from "node:path";
import { loadResults, loadSummary } from "./schema.js";
import { renderHeatmap, DEFAULT_SCALE_MAX } from "./heatmap.js";
import { renderHistogram } from "./histogram.js";
import { renderSummaryTable } from "./table.js";

export const PLOT_KINDS = ["heatmap", "histogram", "summary-table"] as const;
export type PlotKind = (typeof PLOT_KINDS)[number];

export interface PlotJob {
  inputCsv: string;
  summary: string;
  outDir: string;
  kinds?: PlotKind[]; // defaults to all three
  scaleMax?: number | "auto"; // heatmap color scale bound, meters
}

// Renders the requested artifacts and returns the written paths in sorted
// order. Output bytes depend only on the two input files and the options.
export function render(job: PlotJob): string[] {
  const kinds = job.kinds ?? [...PLOT_KINDS];
  for (const kind of kinds) {
    if (!PLOT_KINDS.includes(kind)) {
      throw new Error(`unknown plot kind "${kind}" (expected ${PLOT_KINDS.join(", ")})`);
    }
  }
  const rows = loadResults(job.inputCsv);
  const summary = loadSummary(job.summary);
  const modulations = [...new Set(rows.map((r) => r.modulation))].sort();

  fs.mkdirSync(job.outDir, { recursive: true });
  const written: string[] = [];
  const write = (name: string, content: string) => {
    const target = path.join(job.outDir, name);
    fs.writeFileSync(target, content, "utf-8");
    written.push(target);
  };

  if (kinds.includes("heatmap")) {
    for (const modulation of modulations) {
      write(
        `heatmap_${modulation}.svg`,
        renderHeatmap(rows, summary, modulation, { scaleMax: job.scaleMax ?? DEFAULT_SCALE_MAX }),
      );
    }
  }
  if (kinds.includes("histogram")) {
    for (const modulation of modulations) {
      write(`histogram_${modulation}.svg`, renderHistogram(rows, modulation));
    }
  }
  if (kinds.includes("summary-table")) {
    write("summary_table.txt", renderSummaryTable(summary));
  }
  return written.sort();
}
