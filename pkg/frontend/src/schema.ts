import fs from "node:fs";
import Papa from "papaparse";

export interface ResultRow {
  modulation: string;
  xTrue: number;
  yTrue: number;
  xEst: number;
  yEst: number;
  errorM: number;
  flags: string[];
}

export interface ModulationSummary {
  cornerErr: number;
  edgeErr: number;
  centerErr: number;
  rmsRect: number | null;
  rmsWhole: number;
  meanErr: number;
  maxErr: number;
  nPoints: number;
}

export interface RunSummary {
  anchors: Array<[number, number]>;
  room: [number, number];
  gridStep: number;
  modulations: Record<string, ModulationSummary>;
}

const RESULT_COLUMNS = ["modulation", "x_true", "y_true", "x_est", "y_est", "error_m", "flags"];
// estimates can be "nan" when lateration failed; true coordinates cannot
const NAN_OK = new Set(["x_est", "y_est", "error_m"]);

class SchemaError extends Error {}

function parseNumber(raw: string, column: string, row: number): number {
  const value = Number(raw);
  if (Number.isFinite(value)) return value;
  if (raw.trim().toLowerCase() === "nan" && NAN_OK.has(column)) return NaN;
  throw new SchemaError(`results csv: column "${column}" has non-numeric value "${raw}" (row ${row})`);
}

export function parseResults(text: string): ResultRow[] {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`results csv: ${e.message} (row ${e.row ?? "?"})`);
  }
  const header = parsed.meta.fields ?? [];
  for (const column of RESULT_COLUMNS) {
    if (!header.includes(column)) throw new SchemaError(`results csv: missing column "${column}"`);
  }
  for (const column of header) {
    if (!RESULT_COLUMNS.includes(column)) throw new SchemaError(`results csv: unexpected column "${column}"`);
  }
  return parsed.data.map((record, i) => {
    const modulation = record.modulation;
    if (!modulation) throw new SchemaError(`results csv: column "modulation" is empty (row ${i + 2})`);
    return {
      modulation,
      xTrue: parseNumber(record.x_true, "x_true", i + 2),
      yTrue: parseNumber(record.y_true, "y_true", i + 2),
      xEst: parseNumber(record.x_est, "x_est", i + 2),
      yEst: parseNumber(record.y_est, "y_est", i + 2),
      errorM: parseNumber(record.error_m, "error_m", i + 2),
      flags: record.flags ? record.flags.split("|") : [],
    };
  });
}

export function loadResults(path: string): ResultRow[] {
  return parseResults(fs.readFileSync(path, "utf-8"));
}

function summaryNumber(obj: Record<string, unknown>, field: string, context: string): number {
  const value = obj[field];
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new SchemaError(`summary json: field "${context}${field}" must be a finite number`);
  }
  return value;
}

function summaryPoint(value: unknown, context: string): [number, number] {
  if (!Array.isArray(value) || value.length !== 2 || !value.every((v) => typeof v === "number" && Number.isFinite(v))) {
    throw new SchemaError(`summary json: field "${context}" must be a pair of numbers`);
  }
  return [value[0], value[1]];
}

export function parseSummary(text: string): RunSummary {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`summary json: ${(e as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new SchemaError('summary json: top level must be an object');
  }
  const obj = raw as Record<string, unknown>;
  if (!Array.isArray(obj.anchors) || obj.anchors.length === 0) {
    throw new SchemaError('summary json: field "anchors" must be a non-empty array');
  }
  const anchors = obj.anchors.map((a, i) => summaryPoint(a, `anchors[${i}]`));
  const room = summaryPoint(obj.room, "room");
  const gridStep = summaryNumber(obj, "grid_step", "");
  if (typeof obj.modulations !== "object" || obj.modulations === null || Array.isArray(obj.modulations)) {
    throw new SchemaError('summary json: field "modulations" must be an object');
  }
  const modulations: Record<string, ModulationSummary> = {};
  for (const [name, entry] of Object.entries(obj.modulations as Record<string, unknown>)) {
    if (typeof entry !== "object" || entry === null) {
      throw new SchemaError(`summary json: field "modulations.${name}" must be an object`);
    }
    const stats = entry as Record<string, unknown>;
    const context = `modulations.${name}.`;
    const cornerErr = summaryNumber(stats, "corner_err", context);
    const edgeErr = summaryNumber(stats, "edge_err", context);
    const centerErr = summaryNumber(stats, "center_err", context);
    // null marks a grid too coarse to have interior samples
    const rmsRect = stats.rms_rect === null ? null : summaryNumber(stats, "rms_rect", context);
    modulations[name] = {
      cornerErr,
      edgeErr,
      centerErr,
      rmsRect,
      rmsWhole: summaryNumber(stats, "rms_whole", context),
      meanErr: summaryNumber(stats, "mean_err", context),
      maxErr: summaryNumber(stats, "max_err", context),
      nPoints: summaryNumber(stats, "n_points", context),
    };
  }
  return { anchors, room, gridStep, modulations };
}

export function loadSummary(path: string): RunSummary {
  return parseSummary(fs.readFileSync(path, "utf-8"));
}
