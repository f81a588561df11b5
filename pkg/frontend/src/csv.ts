/**
 * Readers for the solver CLI's run-directory file formats.
 *
 * Time-series CSVs have a leading `t` column followed by `<label>_re` /
 * `<label>_im` column pairs; the Picard ledger has `k,u_correction,
 * p_correction`. Every cell must be a finite decimal number and every row
 * must have the same width as the header. Anything else raises
 * {@link CsvFormatError} so the CLI can exit with status 2.
 */

import Papa from "papaparse";

export class CsvFormatError extends Error {}

/** One complex-valued column of a time-series CSV. */
export interface ComplexSeries {
  label: string;
  re: number[];
  im: number[];
}

export interface SeriesTable {
  t: number[];
  series: ComplexSeries[];
}

export interface LedgerTable {
  k: number[];
  uCorrection: number[];
  pCorrection: number[];
}

function parseRows(text: string, context: string): string[][] {
  const result = Papa.parse<string[]>(text.replace(/\n+$/, ""), {
    delimiter: ",",
    skipEmptyLines: false,
  });
  if (result.errors.length > 0) {
    const err = result.errors[0];
    throw new CsvFormatError(`${context}: ${err.message} (row ${err.row ?? "?"})`);
  }
  const rows = result.data;
  if (rows.length < 1) {
    throw new CsvFormatError(`${context}: empty file`);
  }
  const width = rows[0].length;
  rows.forEach((row, i) => {
    if (row.length !== width) {
      throw new CsvFormatError(
        `${context}: row ${i} has ${row.length} fields, expected ${width}`
      );
    }
  });
  return rows;
}

function toNumber(cell: string, context: string): number {
  if (!/^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/.test(cell.trim())) {
    throw new CsvFormatError(`${context}: not a number: "${cell}"`);
  }
  const v = Number(cell);
  if (!Number.isFinite(v)) {
    throw new CsvFormatError(`${context}: non-finite value: "${cell}"`);
  }
  return v;
}

/** Parse a `t,<label>_re,<label>_im,...` time-series CSV. */
export function parseSeriesCsv(text: string, context = "series csv"): SeriesTable {
  const rows = parseRows(text, context);
  const header = rows[0];
  if (header[0] !== "t") {
    throw new CsvFormatError(`${context}: first column must be "t", got "${header[0]}"`);
  }
  if ((header.length - 1) % 2 !== 0) {
    throw new CsvFormatError(`${context}: columns after "t" must come in re/im pairs`);
  }
  const series: ComplexSeries[] = [];
  for (let c = 1; c < header.length; c += 2) {
    const reName = header[c];
    const imName = header[c + 1];
    if (!reName.endsWith("_re") || !imName.endsWith("_im")) {
      throw new CsvFormatError(
        `${context}: expected "<label>_re","<label>_im" pair, got "${reName}","${imName}"`
      );
    }
    const label = reName.slice(0, -3);
    if (imName.slice(0, -3) !== label) {
      throw new CsvFormatError(
        `${context}: mismatched pair labels "${reName}" / "${imName}"`
      );
    }
    series.push({ label, re: [], im: [] });
  }
  const t: number[] = [];
  for (let i = 1; i < rows.length; i++) {
    const row = rows[i];
    t.push(toNumber(row[0], `${context} row ${i}`));
    series.forEach((s, j) => {
      s.re.push(toNumber(row[1 + 2 * j], `${context} row ${i}`));
      s.im.push(toNumber(row[2 + 2 * j], `${context} row ${i}`));
    });
  }
  if (t.length === 0) {
    throw new CsvFormatError(`${context}: no data rows`);
  }
  return { t, series };
}

/** Parse the `k,u_correction,p_correction` Picard ledger CSV. */
export function parseLedgerCsv(text: string, context = "ledger csv"): LedgerTable {
  const rows = parseRows(text, context);
  const header = rows[0];
  if (header.join(",") !== "k,u_correction,p_correction") {
    throw new CsvFormatError(
      `${context}: unexpected header "${header.join(",")}"`
    );
  }
  const out: LedgerTable = { k: [], uCorrection: [], pCorrection: [] };
  for (let i = 1; i < rows.length; i++) {
    out.k.push(toNumber(rows[i][0], `${context} row ${i}`));
    out.uCorrection.push(toNumber(rows[i][1], `${context} row ${i}`));
    out.pCorrection.push(toNumber(rows[i][2], `${context} row ${i}`));
  }
  if (out.k.length === 0) {
    throw new CsvFormatError(`${context}: no data rows`);
  }
  return out;
}

/** Complex magnitude of a series, sample by sample. */
export function magnitude(s: ComplexSeries): number[] {
  return s.re.map((re, i) => Math.hypot(re, s.im[i]));
}
