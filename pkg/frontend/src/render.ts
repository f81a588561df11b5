/**
 * Render selected figures from a solver run directory into SVG files.
 *
 * Input files are only read, never modified; output filenames are fixed
 * per figure, so a given selection always produces the same file set.
 */

import fs from "node:fs";
import path from "node:path";

import { CsvFormatError } from "./csv.js";
import { FIGURES, FIGURE_NAMES } from "./figures.js";

export interface PlotSpec {
  inDir: string;
  figures: string[];
  outDir: string;
}

/** Renders every selected figure; returns the written file paths. */
export function render(spec: PlotSpec): string[] {
  for (const name of spec.figures) {
    if (!(name in FIGURES)) {
      throw new CsvFormatError(
        `unknown figure "${name}" (available: ${FIGURE_NAMES.join(", ")})`
      );
    }
  }
  if (spec.figures.length === 0) {
    return [];
  }
  if (!fs.existsSync(spec.inDir) || !fs.statSync(spec.inDir).isDirectory()) {
    throw new CsvFormatError(`input directory not found: ${spec.inDir}`);
  }
  const rendered = spec.figures.map((name) => FIGURES[name](spec.inDir));
  fs.mkdirSync(spec.outDir, { recursive: true });
  const written: string[] = [];
  for (const fig of rendered) {
    const target = path.join(spec.outDir, fig.filename);
    fs.writeFileSync(target, fig.svg);
    written.push(target);
  }
  return written;
}
