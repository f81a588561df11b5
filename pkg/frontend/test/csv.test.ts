import { describe, expect, it } from "vitest";

import {
  CsvFormatError,
  magnitude,
  parseLedgerCsv,
  parseSeriesCsv,
} from "../src/csv.js";

const SERIES = [
  "t,p0_re,p0_im,p1_re,p1_im",
  "0,1,0,2,-1",
  "0.5,0.25,0.125,-3e-2,4E+1",
].join("\n");

describe("parseSeriesCsv", () => {
  it("parses the t + re/im pair layout", () => {
    const table = parseSeriesCsv(SERIES);
    expect(table.t).toEqual([0, 0.5]);
    expect(table.series.map((s) => s.label)).toEqual(["p0", "p1"]);
    expect(table.series[0].re).toEqual([1, 0.25]);
    expect(table.series[0].im).toEqual([0, 0.125]);
    expect(table.series[1].re).toEqual([2, -0.03]);
    expect(table.series[1].im).toEqual([-1, 40]);
  });

  it("accepts a trailing newline", () => {
    expect(parseSeriesCsv(SERIES + "\n").t).toHaveLength(2);
  });

  it("rejects a missing t column", () => {
    expect(() => parseSeriesCsv("x,p0_re,p0_im\n0,1,2")).toThrow(CsvFormatError);
  });

  it("rejects an unpaired column", () => {
    expect(() => parseSeriesCsv("t,p0_re\n0,1")).toThrow(CsvFormatError);
  });

  it("rejects mismatched pair labels", () => {
    expect(() => parseSeriesCsv("t,p0_re,p1_im\n0,1,2")).toThrow(CsvFormatError);
  });

  it("rejects ragged rows", () => {
    expect(() => parseSeriesCsv("t,p0_re,p0_im\n0,1")).toThrow(CsvFormatError);
  });

  it("rejects non-numeric cells", () => {
    expect(() => parseSeriesCsv("t,p0_re,p0_im\n0,one,2")).toThrow(CsvFormatError);
    expect(() => parseSeriesCsv("t,p0_re,p0_im\n0,NaN,2")).toThrow(CsvFormatError);
    expect(() => parseSeriesCsv("t,p0_re,p0_im\n0,Infinity,2")).toThrow(CsvFormatError);
  });

  it("rejects a header-only file", () => {
    expect(() => parseSeriesCsv("t,p0_re,p0_im")).toThrow(CsvFormatError);
  });
});

describe("parseLedgerCsv", () => {
  it("parses iteration corrections", () => {
    const ledger = parseLedgerCsv("k,u_correction,p_correction\n1,0.5,0\n2,0.25,0.1");
    expect(ledger.k).toEqual([1, 2]);
    expect(ledger.uCorrection).toEqual([0.5, 0.25]);
    expect(ledger.pCorrection).toEqual([0, 0.1]);
  });

  it("rejects a foreign header", () => {
    expect(() => parseLedgerCsv("a,b,c\n1,2,3")).toThrow(CsvFormatError);
  });
});

describe("magnitude", () => {
  it("computes complex magnitudes sample by sample", () => {
    expect(magnitude({ label: "u", re: [3, 0], im: [4, -2] })).toEqual([5, 2]);
  });
});
