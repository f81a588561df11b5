#!/usr/bin/env node
/**
 * vibrocavity-plots render --in DIR --figures LIST --out DIR
 *
 * Reads the solver CLI's CSV/JSON outputs from DIR and writes one SVG per
 * selected figure. Exit codes: 0 success (including an empty selection),
 * 2 for missing or malformed inputs or an unknown figure name.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { CsvFormatError } from "./csv.js";
import { FIGURE_NAMES } from "./figures.js";
import { render } from "./render.js";

export function main(argv: string[]): number {
  const parser = yargs(argv)
    .scriptName("vibrocavity-plots")
    .command("render", "render figures from a run directory", (y) =>
      y
        .option("in", {
          type: "string",
          demandOption: true,
          describe: "run directory produced by the solver CLI",
        })
        .option("figures", {
          type: "string",
          demandOption: true,
          describe: `comma-separated list from: ${FIGURE_NAMES.join(", ")} (or "all")`,
        })
        .option("out", {
          type: "string",
          demandOption: true,
          describe: "directory for the SVG files",
        })
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new CsvFormatError(msg);
    });

  let args;
  try {
    args = parser.parseSync();
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }

  const raw = String(args.figures);
  const figures =
    raw.trim() === ""
      ? []
      : raw.trim() === "all"
        ? [...FIGURE_NAMES]
        : raw.split(",").map((f) => f.trim()).filter((f) => f !== "");

  try {
    const written = render({
      inDir: String(args.in),
      figures,
      outDir: String(args.out),
    });
    for (const f of written) {
      console.log(`SVG -> ${f}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof CsvFormatError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const entry = process.argv[1];
if (entry && (entry.endsWith("cli.js") || entry.endsWith("cli.ts"))) {
  process.exit(main(hideBin(process.argv)));
}
