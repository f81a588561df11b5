/**
 * Figure registry: each figure turns files from a solver run directory
 * into one SVG document with a fixed output filename.
 */

import fs from "node:fs";
import path from "node:path";

import { buildChart, seriesColor, Series } from "./chart.js";
import {
  CsvFormatError,
  magnitude,
  parseLedgerCsv,
  parseSeriesCsv,
} from "./csv.js";

export interface Figure {
  filename: string;
  svg: string;
}

export type FigureFn = (inDir: string) => Figure;

const MAX_SERIES = 8;

function readText(inDir: string, name: string): string {
  const p = path.join(inDir, name);
  if (!fs.existsSync(p)) {
    throw new CsvFormatError(`missing input file: ${p}`);
  }
  return fs.readFileSync(p, "utf-8");
}

function pressureFigure(inDir: string): Figure {
  const table = parseSeriesCsv(readText(inDir, "probe_pressure.csv"), "probe_pressure.csv");
  if (table.series.length === 0) {
    throw new CsvFormatError("probe_pressure.csv: no probe columns");
  }
  const series: Series[] = table.series.map((s, i) => ({
    x: table.t,
    y: s.re,
    color: seriesColor(i),
    label: `Re p(${s.label})`,
  }));
  return {
    filename: "pressure.svg",
    svg: buildChart({
      title: "Pressure at probe points",
      subtitle: `${table.t.length} samples, ${table.series.length} probes`,
      xLabel: "time",
      yLabel: "pressure",
      series,
    }),
  };
}

function modesFigure(inDir: string): Figure {
  const table = parseSeriesCsv(readText(inDir, "pressure_modes.csv"), "pressure_modes.csv");
  const shown = table.series.slice(0, MAX_SERIES);
  const series: Series[] = shown.map((s, i) => ({
    x: table.t,
    y: magnitude(s),
    color: seriesColor(i),
    label: `|${s.label}|`,
  }));
  return {
    filename: "modes.svg",
    svg: buildChart({
      title: "Cavity pressure modal amplitudes",
      subtitle: `first ${shown.length} of ${table.series.length} modes`,
      xLabel: "time",
      yLabel: "modal amplitude",
      series,
    }),
  };
}

function membraneFigure(inDir: string): Figure {
  const names = fs
    .readdirSync(inDir)
    .filter((n) => /^membrane_patch\d+\.csv$/.test(n))
    .sort(
      (a, b) =>
        parseInt(a.replace(/\D/g, ""), 10) - parseInt(b.replace(/\D/g, ""), 10)
    );
  if (names.length === 0) {
    throw new CsvFormatError(`no membrane_patch*.csv files in ${inDir}`);
  }
  const series: Series[] = [];
  let total = 0;
  for (const name of names) {
    const table = parseSeriesCsv(readText(inDir, name), name);
    const patch = name.replace(/\D/g, "");
    total += table.series.length;
    const budget = Math.max(1, Math.floor(MAX_SERIES / names.length));
    for (const s of table.series.slice(0, budget)) {
      series.push({
        x: table.t,
        y: magnitude(s),
        color: seriesColor(series.length),
        label: `patch ${patch} |${s.label}|`,
      });
    }
  }
  return {
    filename: "membrane.svg",
    svg: buildChart({
      title: "Membrane modal displacement amplitudes",
      subtitle: `${names.length} patches, ${total} modes total`,
      xLabel: "time",
      yLabel: "displacement amplitude",
      series,
    }),
  };
}

function picardFigure(inDir: string): Figure {
  const ledger = parseLedgerCsv(readText(inDir, "ledger.csv"), "ledger.csv");
  const positive = (k: number[], v: number[]) => {
    const x: number[] = [];
    const y: number[] = [];
    v.forEach((val, i) => {
      if (val > 0) {
        x.push(k[i]);
        y.push(val);
      }
    });
    return { x, y };
  };
  const u = positive(ledger.k, ledger.uCorrection);
  const p = positive(ledger.k, ledger.pCorrection);
  if (u.x.length === 0 && p.x.length === 0) {
    throw new CsvFormatError("ledger.csv: all corrections are zero");
  }
  const series: Series[] = [];
  if (u.x.length > 0) {
    series.push({ ...u, color: seriesColor(0), label: "‖δu‖", markers: true });
  }
  if (p.x.length > 0) {
    series.push({ ...p, color: seriesColor(1), label: "‖δp‖", markers: true });
  }
  return {
    filename: "picard.svg",
    svg: buildChart({
      title: "Picard correction decay",
      subtitle: `${ledger.k.length} iterations (zero corrections omitted)`,
      xLabel: "iteration k",
      yLabel: "correction norm",
      logY: true,
      series,
    }),
  };
}

interface ScalingPoint {
  epsilon: number;
  norm: number;
}

function collectScalingPoints(inDir: string): ScalingPoint[] {
  const candidates = [path.join(inDir, "eigs_report.json")];
  for (const entry of fs.readdirSync(inDir, { withFileTypes: true })) {
    if (entry.isDirectory()) {
      candidates.push(path.join(inDir, entry.name, "eigs_report.json"));
    }
  }
  const points: ScalingPoint[] = [];
  for (const p of candidates.sort()) {
    if (!fs.existsSync(p)) continue;
    let doc: unknown;
    try {
      doc = JSON.parse(fs.readFileSync(p, "utf-8"));
    } catch (err) {
      throw new CsvFormatError(`${p}: invalid JSON (${(err as Error).message})`);
    }
    const rec = doc as { epsilon?: unknown; operator_norm?: unknown };
    if (typeof rec.epsilon !== "number" || typeof rec.operator_norm !== "number") {
      throw new CsvFormatError(`${p}: missing numeric epsilon/operator_norm fields`);
    }
    if (rec.epsilon > 0 && rec.operator_norm > 0) {
      points.push({ epsilon: rec.epsilon, norm: rec.operator_norm });
    }
  }
  points.sort((a, b) => a.epsilon - b.epsilon);
  return points;
}

/** Least-squares slope of log10(norm) against log10(epsilon). */
export function logLogSlope(points: ScalingPoint[]): number {
  const lx = points.map((p) => Math.log10(p.epsilon));
  const ly = points.map((p) => Math.log10(p.norm));
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let num = 0;
  let den = 0;
  for (let i = 0; i < n; i++) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) ** 2;
  }
  if (den === 0) {
    throw new CsvFormatError("scaling points share a single epsilon value");
  }
  return num / den;
}

function scalingFigure(inDir: string): Figure {
  const points = collectScalingPoints(inDir);
  if (points.length < 2) {
    throw new CsvFormatError(
      `need at least two eigs_report.json files with distinct epsilon under ${inDir}, found ${points.length}`
    );
  }
  const slope = logLogSlope(points);
  const series: Series[] = [
    {
      x: points.map((p) => p.epsilon),
      y: points.map((p) => p.norm),
      color: seriesColor(0),
      label: "‖V‖",
      markers: true,
    },
  ];
  return {
    filename: "scaling.svg",
    svg: buildChart({
      title: "Perturbation-operator norm vs amplitude",
      subtitle: `${points.length} runs`,
      xLabel: "epsilon",
      yLabel: "operator norm",
      logX: true,
      logY: true,
      series,
      annotations: [`fitted slope = ${slope.toFixed(3)}`],
    }),
  };
}

export const FIGURES: Record<string, FigureFn> = {
  pressure: pressureFigure,
  modes: modesFigure,
  membrane: membraneFigure,
  picard: picardFigure,
  scaling: scalingFigure,
};

export const FIGURE_NAMES = Object.keys(FIGURES);
