#!/usr/bin/env node
/**
 * polymerlab-render: figures from experiment CSVs.
 *
 *   render --in <dir> --out <dir> [--experiment Ei]
 *
 * Exit codes: 0 all figures rendered, 1 any figure failed, 2 bad usage.
 */

import { pathToFileURL } from "node:url";

import { SchemaError } from "./schema.js";
import { KNOWN_EXPERIMENTS, renderDirectory } from "./render.js";

function usage(): void {
  console.error("usage: polymerlab-render render --in <dir> --out <dir> [--experiment Ei]");
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] !== "render") {
    usage();
    return 2;
  }
  let inDir = "";
  let outDir = "";
  let only: string | undefined;
  for (let i = 1; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--in") inDir = argv[++i] ?? "";
    else if (a === "--out") outDir = argv[++i] ?? "";
    else if (a === "--experiment") only = argv[++i];
    else {
      console.error(`unknown argument ${a}`);
      usage();
      return 2;
    }
  }
  if (!inDir || !outDir) {
    usage();
    return 2;
  }
  if (only && !(KNOWN_EXPERIMENTS as readonly string[]).includes(only)) {
    console.error(`unknown experiment ${only}; known: ${KNOWN_EXPERIMENTS.join(", ")}`);
    return 2;
  }
  const outcome = renderDirectory(inDir, outDir, only);
  for (const f of outcome.rendered) {
    console.log(`rendered ${f}`);
  }
  for (const s of outcome.skipped) {
    console.log(`skipped ${s}: no CSV`);
  }
  for (const { experiment, error } of outcome.failures) {
    if (error instanceof SchemaError) {
      console.error(`${experiment}: schema error in column "${error.column}": ${error.message}`);
    } else {
      console.error(`${experiment}: ${error.name}: ${error.message}`);
    }
  }
  if (outcome.failures.length > 0) return 1;
  if (outcome.rendered.length === 0 && !only) {
    console.error("nothing rendered: no CSVs found");
    return 1;
  }
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
