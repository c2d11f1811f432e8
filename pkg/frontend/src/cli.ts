#!/usr/bin/env node
import fs from "node:fs";
import { pathToFileURL } from "node:url";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { render, PLOT_KINDS, type PlotKind } from "./render.js";

export function runCli(argv: string[]): number {
  const args = yargs(argv)
    .scriptName("plot")
    .usage("$0 --csv <results.csv> --summary <summary.json> --out <dir> [--kinds ...]")
    .option("csv", { type: "string", demandOption: true, describe: "grid sweep results csv" })
    .option("summary", { type: "string", demandOption: true, describe: "run summary json" })
    .option("out", { type: "string", demandOption: true, describe: "output directory" })
    .option("kinds", {
      type: "string",
      describe: `comma separated subset of: ${PLOT_KINDS.join(", ")}`,
    })
    .option("auto-scale", {
      type: "boolean",
      default: false,
      describe: "span the heatmap color scale over the data instead of [0, 2.5] m",
    })
    .option("scale-max", { type: "number", describe: "heatmap color scale bound in meters" })
    .strict()
    .exitProcess(false)
    .fail((msg) => {
      throw new Error(msg);
    })
    .parseSync();

  const kinds = args.kinds === undefined ? undefined : (args.kinds.split(",").map((k) => k.trim()) as PlotKind[]);
  const written = render({
    inputCsv: args.csv,
    summary: args.summary,
    outDir: args.out,
    kinds,
    scaleMax: args.autoScale ? "auto" : args.scaleMax,
  });
  for (const file of written) console.log(`wrote ${file}`);
  return 0;
}

// realpath resolves the bin symlink npm creates
const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(fs.realpathSync(process.argv[1])).href;
if (invokedDirectly) {
  try {
    process.exit(runCli(hideBin(process.argv)));
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    process.exit(2);
  }
}
