import { existsSync, mkdtempSync, readFileSync, statSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { SchemaError } from "../src/schema.js";
import { LIL_REFERENCE_CONSTANTS } from "../src/figures.js";
import { render, renderDirectory } from "../src/render.js";

const HEADER = "experiment,replicate,d,n,statistic,value,seed";

function csvLines(rows: Array<[string, number, number, number, string, number]>): string {
  return [HEADER, ...rows.map((r) => `${r[0]},${r[1]},${r[2]},${r[3]},${r[4]},${r[5]},1`)].join("\n") + "\n";
}

let dir: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "plab-render-"));
});

function syntheticDir(): string {
  const d = mkdtempSync(join(tmpdir(), "plab-csvs-"));
  // E1/E2/E3: qq pairs
  for (const [exp, tag] of [
    ["E1", ""],
    ["E2", "_t100"],
    ["E3", "_t025"],
  ] as const) {
    const rows: Array<[string, number, number, number, string, number]> = [];
    for (let i = 0; i < 40; i++) {
      const q = -2 + (4 * i) / 39;
      rows.push([exp, i, 1, 1000, `qq_theory${tag}`, q]);
      rows.push([exp, i, 1, 1000, `qq_sample${tag}`, q + 0.05 * Math.sin(i)]);
    }
    writeFileSync(join(d, `${exp}.csv`), csvLines(rows));
  }
  // E4: rms series for two dimensions
  const e4: Array<[string, number, number, number, string, number]> = [];
  for (const dd of [1, 3]) {
    for (let k = 10; k <= 18; k++) {
      const n = 2 ** k;
      e4.push(["E4", -1, dd, n, "rms_M", Math.pow(n, dd === 1 ? 1.0 : 0.5)]);
      e4.push(["E4", -1, dd, n, "rms_Xi2", Math.pow(n, dd === 1 ? 1.3 : 0.48)]);
    }
  }
  e4.push(["E4", -1, 1, 2 ** 18, "slope_rms_M_d1", 1.0]);
  writeFileSync(join(d, "E4.csv"), csvLines(e4));
  // E5: exact quarter-power law plus the engine's fit annotation
  const e5: Array<[string, number, number, number, string, number]> = [];
  for (let k = 10; k <= 18; k++) {
    e5.push(["E5", -1, 1, 2 ** k, "median_coupling_error", Math.pow(2 ** k, 0.25)]);
  }
  e5.push(["E5", -1, 1, 2 ** 18, "fit_slope", 0.25]);
  writeFileSync(join(d, "E5.csv"), csvLines(e5));
  // E6: sandwich curves (y encoded as percent in the n column)
  const e6: Array<[string, number, number, number, string, number]> = [];
  for (const y of [40, 50, 70, 100]) {
    const p = Math.exp((-Math.PI * Math.PI * 10000) / (8 * y * y));
    e6.push(["E6", -1, 1, y, "smallball_empirical", p * 1.2]);
    e6.push(["E6", -1, 1, y, "smallball_lower", (p * 2) / Math.PI]);
    e6.push(["E6", -1, 1, y, "smallball_upper", (p * 4) / Math.PI]);
    e6.push(["E6", -1, 1, y, "smallball_ci_low", p * 1.1]);
    e6.push(["E6", -1, 1, y, "smallball_ci_high", p * 1.3]);
  }
  writeFileSync(join(d, "E6.csv"), csvLines(e6));
  // E7: trajectories for three dimensions plus references
  const e7: Array<[string, number, number, number, string, number]> = [];
  for (const dd of [1, 2, 3]) {
    for (let k = 10; k <= 23; k++) {
      const n = 2 ** k;
      const r = LIL_REFERENCE_CONSTANTS[dd] * (1.2 + 0.4 * Math.cos(k + dd));
      e7.push(["E7", -1, dd, n, "lil_r", r]);
      e7.push(["E7", -1, dd, n, "lil_runmin", LIL_REFERENCE_CONSTANTS[dd] * 1.1]);
    }
    e7.push(["E7", -1, dd, 2 ** 23, "lil_reference", LIL_REFERENCE_CONSTANTS[dd]]);
  }
  writeFileSync(join(d, "E7.csv"), csvLines(e7));
  // kappa: replicate scatter plus exact line
  const ka: Array<[string, number, number, number, string, number]> = [];
  for (let i = 0; i < 50; i++) {
    ka.push(["kappa", i, 3, 100000, "i_over_n", 0.51 + 0.01 * Math.sin(i * 2.4)]);
  }
  ka.push(["kappa", -1, 3, 100000, "i_over_n_exact", 0.5125]);
  ka.push(["kappa", -1, 3, 0, "kappa_series", 0.516386]);
  writeFileSync(join(d, "kappa.csv"), csvLines(ka));
  return d;
}

describe("render", () => {
  it("renders one nonempty figure per experiment", () => {
    const src = syntheticDir();
    const out = join(dir, "figs");
    const outcome = renderDirectory(src, out);
    expect(outcome.failures).toEqual([]);
    expect(outcome.rendered).toHaveLength(8);
    for (const f of outcome.rendered) {
      expect(statSync(f).size).toBeGreaterThan(500);
      expect(readFileSync(f, "utf8")).toContain("<svg");
    }
  });

  it("annotates the E5 power law with the engine's fitted slope", () => {
    const src = syntheticDir();
    const out = render({
      experiment: "E5",
      inputCsv: join(src, "E5.csv"),
      outputImage: join(dir, "e5.svg"),
    });
    const svg = readFileSync(out, "utf8");
    expect(svg).toContain("fitted slope 0.250");
  });

  it("overlays the three reference constants on the E7 figure", () => {
    const src = syntheticDir();
    const out = render({
      experiment: "E7",
      inputCsv: join(src, "E7.csv"),
      outputImage: join(dir, "e7.svg"),
    });
    const svg = readFileSync(out, "utf8");
    for (const c of [1.4135, 0.4431, 0.7982]) {
      expect(svg).toContain(c.toFixed(4));
    }
  });

  it("raises the typed parse error and writes nothing on schema violations", () => {
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "experiment,replicate,dim,n,statistic,value,seed\nE5,0,1,10,x,1,1\n");
    const target = join(dir, "bad.svg");
    expect(() => render({ experiment: "E5", inputCsv: bad, outputImage: target })).toThrowError(
      SchemaError,
    );
    expect(existsSync(target)).toBe(false);
  });

  it("raises on an empty CSV body and writes nothing", () => {
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, HEADER + "\n");
    const target = join(dir, "empty.svg");
    expect(() => render({ experiment: "E5", inputCsv: empty, outputImage: target })).toThrowError(
      SchemaError,
    );
    expect(existsSync(target)).toBe(false);
  });

  it("re-renders idempotently", () => {
    const src = syntheticDir();
    const out = join(dir, "idem");
    const a = renderDirectory(src, out, "E5");
    const first = readFileSync(a.rendered[0], "utf8");
    const b = renderDirectory(src, out, "E5");
    const second = readFileSync(b.rendered[0], "utf8");
    expect(second).toBe(first);
  });
});
