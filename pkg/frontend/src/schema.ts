/**
 * Fixed CSV schema shared with the simulation engine:
 *   experiment, replicate, d, n, statistic, value, seed
 * Anything else is a schema violation and raises SchemaError naming the
 * offending column.
 */

export interface Row {
  experiment: string;
  replicate: number;
  d: number;
  n: number;
  statistic: string;
  value: number;
  seed: string;
}

export const EXPECTED_HEADER = [
  "experiment",
  "replicate",
  "d",
  "n",
  "statistic",
  "value",
  "seed",
] as const;

export class SchemaError extends Error {
  readonly column: string;

  constructor(column: string, message: string) {
    super(message);
    this.name = "SchemaError";
    this.column = column;
  }
}

function splitLine(line: string): string[] {
  // engine output never quotes: plain comma split is the schema
  return line.split(",");
}

export function parseCsv(text: string): Row[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("experiment", "empty CSV: no header row");
  }
  const header = splitLine(lines[0]).map((h) => h.trim());
  for (let i = 0; i < EXPECTED_HEADER.length; i++) {
    if (header[i] !== EXPECTED_HEADER[i]) {
      throw new SchemaError(
        EXPECTED_HEADER[i],
        `column ${i + 1} is ${JSON.stringify(header[i] ?? "<missing>")}, expected "${EXPECTED_HEADER[i]}"`,
      );
    }
  }
  if (header.length !== EXPECTED_HEADER.length) {
    throw new SchemaError(
      header[EXPECTED_HEADER.length],
      `unexpected extra column "${header[EXPECTED_HEADER.length]}"`,
    );
  }
  if (lines.length === 1) {
    throw new SchemaError("experiment", "empty CSV body: header only");
  }
  const rows: Row[] = [];
  for (let li = 1; li < lines.length; li++) {
    const parts = splitLine(lines[li]);
    if (parts.length !== EXPECTED_HEADER.length) {
      throw new SchemaError(
        EXPECTED_HEADER[Math.min(parts.length, EXPECTED_HEADER.length - 1)],
        `row ${li + 1} has ${parts.length} fields, expected ${EXPECTED_HEADER.length}`,
      );
    }
    const replicate = Number(parts[1]);
    const d = Number(parts[2]);
    const n = Number(parts[3]);
    const value = Number(parts[5]);
    if (!Number.isFinite(replicate) || !Number.isInteger(replicate)) {
      throw new SchemaError("replicate", `row ${li + 1}: "${parts[1]}" is not an integer`);
    }
    if (!Number.isFinite(d) || !Number.isInteger(d)) {
      throw new SchemaError("d", `row ${li + 1}: "${parts[2]}" is not an integer`);
    }
    if (!Number.isFinite(n) || !Number.isInteger(n)) {
      throw new SchemaError("n", `row ${li + 1}: "${parts[3]}" is not an integer`);
    }
    if (!Number.isFinite(value)) {
      throw new SchemaError("value", `row ${li + 1}: "${parts[5]}" is not a number`);
    }
    rows.push({
      experiment: parts[0],
      replicate,
      d,
      n,
      statistic: parts[4],
      value,
      seed: parts[6],
    });
  }
  return rows;
}

export function byStatistic(rows: Row[], statistic: string): Row[] {
  return rows.filter((r) => r.statistic === statistic);
}

export function statisticNames(rows: Row[]): Set<string> {
  return new Set(rows.map((r) => r.statistic));
}
