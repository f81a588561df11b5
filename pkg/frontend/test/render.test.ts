import fs from "node:fs";
import os from "node:os";
import path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { CsvFormatError } from "../src/csv.js";
import { FIGURE_NAMES, logLogSlope } from "../src/figures.js";
import { render } from "../src/render.js";

const RUN_DIR = path.join(__dirname, "fixtures", "run");

let tmp: string;

beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "plots-"));
});

afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

function outFiles(dir: string): string[] {
  return fs.existsSync(dir) ? fs.readdirSync(dir).sort() : [];
}

describe("render", () => {
  it("renders every figure type from the reference run directory", () => {
    const written = render({ inDir: RUN_DIR, figures: [...FIGURE_NAMES], outDir: tmp });
    expect(written.map((p) => path.basename(p)).sort()).toEqual([
      "membrane.svg",
      "modes.svg",
      "picard.svg",
      "pressure.svg",
      "scaling.svg",
    ]);
    for (const p of written) {
      const svg = fs.readFileSync(p, "utf-8");
      expect(svg.startsWith("<svg ")).toBe(true);
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
      expect(svg).toContain("<polyline");
    }
  });

  it("produces byte-identical output on rerun", () => {
    render({ inDir: RUN_DIR, figures: ["pressure"], outDir: tmp });
    const first = fs.readFileSync(path.join(tmp, "pressure.svg"), "utf-8");
    render({ inDir: RUN_DIR, figures: ["pressure"], outDir: tmp });
    const second = fs.readFileSync(path.join(tmp, "pressure.svg"), "utf-8");
    expect(second).toBe(first);
  });

  it("does not modify input files", () => {
    const before = new Map(
      fs.readdirSync(RUN_DIR)
        .filter((n) => fs.statSync(path.join(RUN_DIR, n)).isFile())
        .map((n) => [n, fs.readFileSync(path.join(RUN_DIR, n), "utf-8")])
    );
    render({ inDir: RUN_DIR, figures: [...FIGURE_NAMES], outDir: tmp });
    for (const [name, content] of before) {
      expect(fs.readFileSync(path.join(RUN_DIR, name), "utf-8")).toBe(content);
    }
  });

  it("writes nothing for an empty selection", () => {
    const out = path.join(tmp, "none");
    expect(render({ inDir: RUN_DIR, figures: [], outDir: out })).toEqual([]);
    expect(fs.existsSync(out)).toBe(false);
  });

  it("rejects unknown figure names before writing anything", () => {
    const out = path.join(tmp, "bad");
    expect(() => render({ inDir: RUN_DIR, figures: ["pressure", "nope"], outDir: out }))
      .toThrow(CsvFormatError);
    expect(fs.existsSync(out)).toBe(false);
  });

  it("annotates the fitted log-log slope near 2", () => {
    render({ inDir: RUN_DIR, figures: ["scaling"], outDir: tmp });
    const svg = fs.readFileSync(path.join(tmp, "scaling.svg"), "utf-8");
    const m = svg.match(/fitted slope = (-?\d+\.\d+)/);
    expect(m).not.toBeNull();
    expect(Math.abs(Number(m![1]) - 2)).toBeLessThan(0.1);
  });
});

describe("logLogSlope", () => {
  it("recovers an exact power law", () => {
    const pts = [1e-4, 1e-3, 1e-2].map((e) => ({ epsilon: e, norm: 3 * e * e }));
    expect(logLogSlope(pts)).toBeCloseTo(2, 12);
  });
});

describe("cli", () => {
  function copyRun(): string {
    const dir = path.join(tmp, "run");
    fs.cpSync(RUN_DIR, dir, { recursive: true });
    return dir;
  }

  it("renders a pressure figure from a simulate output with exit 0", () => {
    const out = path.join(tmp, "figs");
    const code = main(["render", "--in", RUN_DIR, "--figures", "pressure", "--out", out]);
    expect(code).toBe(0);
    expect(outFiles(out)).toEqual(["pressure.svg"]);
  });

  it("expands the 'all' selection", () => {
    const out = path.join(tmp, "figs");
    const code = main(["render", "--in", RUN_DIR, "--figures", "all", "--out", out]);
    expect(code).toBe(0);
    expect(outFiles(out)).toEqual([
      "membrane.svg",
      "modes.svg",
      "picard.svg",
      "pressure.svg",
      "scaling.svg",
    ]);
  });

  it("returns 0 and writes no files for an empty selection", () => {
    const out = path.join(tmp, "figs");
    const code = main(["render", "--in", RUN_DIR, "--figures", "", "--out", out]);
    expect(code).toBe(0);
    expect(fs.existsSync(out)).toBe(false);
  });

  it("exits 2 on a malformed CSV", () => {
    const dir = copyRun();
    fs.writeFileSync(path.join(dir, "probe_pressure.csv"), "t,probe0_re,probe0_im\n0,oops,1\n");
    const code = main(["render", "--in", dir, "--figures", "pressure", "--out", path.join(tmp, "figs")]);
    expect(code).toBe(2);
  });

  it("exits 2 on a ragged CSV row", () => {
    const dir = copyRun();
    fs.writeFileSync(path.join(dir, "ledger.csv"), "k,u_correction,p_correction\n1,0.5\n");
    const code = main(["render", "--in", dir, "--figures", "picard", "--out", path.join(tmp, "figs")]);
    expect(code).toBe(2);
  });

  it("exits 2 when an input file is missing", () => {
    const dir = copyRun();
    fs.rmSync(path.join(dir, "pressure_modes.csv"));
    const code = main(["render", "--in", dir, "--figures", "modes", "--out", path.join(tmp, "figs")]);
    expect(code).toBe(2);
  });

  it("exits 2 on an unknown figure name", () => {
    const code = main(["render", "--in", RUN_DIR, "--figures", "bogus", "--out", path.join(tmp, "figs")]);
    expect(code).toBe(2);
  });

  it("exits 2 on a missing input directory", () => {
    const code = main(["render", "--in", path.join(tmp, "missing"), "--figures", "pressure", "--out", path.join(tmp, "figs")]);
    expect(code).toBe(2);
  });
});
