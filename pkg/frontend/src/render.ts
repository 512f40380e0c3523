/** FigureSpec execution: CSV in, SVG out; nothing written on parse errors. */

import { readFileSync, writeFileSync, existsSync, mkdirSync } from "node:fs";
import { dirname, join } from "node:path";

import { parseCsv } from "./schema.js";
import { buildFigure } from "./figures.js";

export interface FigureSpec {
  experiment: string;
  inputCsv: string;
  outputImage: string;
}

export const KNOWN_EXPERIMENTS = ["E1", "E2", "E3", "E4", "E5", "E6", "E7", "kappa"] as const;

export function render(spec: FigureSpec): string {
  const text = readFileSync(spec.inputCsv, "utf8");
  const rows = parseCsv(text); // throws SchemaError before anything is written
  const svg = buildFigure(spec.experiment, rows);
  mkdirSync(dirname(spec.outputImage), { recursive: true });
  writeFileSync(spec.outputImage, svg);
  return spec.outputImage;
}

export interface BatchOutcome {
  rendered: string[];
  skipped: string[];
  failures: Array<{ experiment: string; error: Error }>;
}

export function renderDirectory(inDir: string, outDir: string, only?: string): BatchOutcome {
  const outcome: BatchOutcome = { rendered: [], skipped: [], failures: [] };
  const targets = only ? [only] : [...KNOWN_EXPERIMENTS];
  for (const exp of targets) {
    const csv = join(inDir, `${exp}.csv`);
    if (!existsSync(csv)) {
      outcome.skipped.push(exp);
      continue;
    }
    try {
      outcome.rendered.push(
        render({ experiment: exp, inputCsv: csv, outputImage: join(outDir, `${exp}.svg`) }),
      );
    } catch (err) {
      outcome.failures.push({ experiment: exp, error: err as Error });
    }
  }
  return outcome;
}
