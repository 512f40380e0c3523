import { describe, expect, it } from "vitest";

import { SchemaError, parseCsv } from "../src/schema.js";

const HEADER = "experiment,replicate,d,n,statistic,value,seed";

describe("parseCsv", () => {
  it("parses well-formed rows", () => {
    const rows = parseCsv(`${HEADER}\nE5,-1,1,1024,median_coupling_error,12.5,42\n`);
    expect(rows).toHaveLength(1);
    expect(rows[0]).toMatchObject({
      experiment: "E5",
      replicate: -1,
      d: 1,
      n: 1024,
      statistic: "median_coupling_error",
      value: 12.5,
    });
  });

  it("rejects an empty body with a typed error", () => {
    expect(() => parseCsv(`${HEADER}\n`)).toThrowError(SchemaError);
    expect(() => parseCsv("")).toThrowError(SchemaError);
  });

  it("names the offending column on header mismatch", () => {
    const bad = "experiment,replicate,dim,n,statistic,value,seed";
    try {
      parseCsv(`${bad}\nE1,0,1,10,x,1.0,7\n`);
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(SchemaError);
      expect((err as SchemaError).column).toBe("d");
    }
  });

  it("names the offending column on a bad value", () => {
    try {
      parseCsv(`${HEADER}\nE1,0,1,10,x,not-a-number,7\n`);
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(SchemaError);
      expect((err as SchemaError).column).toBe("value");
    }
  });

  it("rejects rows with missing fields", () => {
    expect(() => parseCsv(`${HEADER}\nE1,0,1,10,x\n`)).toThrowError(SchemaError);
  });

  it("rejects non-integer n", () => {
    try {
      parseCsv(`${HEADER}\nE1,0,1,10.5,x,1.0,7\n`);
      expect.unreachable();
    } catch (err) {
      expect((err as SchemaError).column).toBe("n");
    }
  });
});
