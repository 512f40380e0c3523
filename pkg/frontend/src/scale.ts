/** Linear and log scales with round tick generation, data -> pixel. */

export type AxisKind = "linear" | "log";

export interface Scale {
  kind: AxisKind;
  domain: [number, number];
  range: [number, number];
  map(x: number): number;
  ticks(count?: number): number[];
}

function niceStep(span: number, count: number): number {
  const raw = span / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const factor = norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10;
  return factor * mag;
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 1;
    d1 += 1;
  }
  const f = (range[1] - range[0]) / (d1 - d0);
  return {
    kind: "linear",
    domain: [d0, d1],
    range,
    map: (x) => range[0] + (x - d0) * f,
    ticks(count = 6) {
      const step = niceStep(d1 - d0, count);
      const start = Math.ceil(d0 / step) * step;
      const out: number[] = [];
      for (let v = start; v <= d1 + 1e-12 * Math.abs(step); v += step) {
        out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
      }
      return out;
    },
  };
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const d0 = Math.max(domain[0], Number.MIN_VALUE);
  const d1 = Math.max(domain[1], d0 * 1.0001);
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const f = (range[1] - range[0]) / (l1 - l0);
  return {
    kind: "log",
    domain: [d0, d1],
    range,
    map: (x) => range[0] + (Math.log10(Math.max(x, Number.MIN_VALUE)) - l0) * f,
    ticks() {
      const out: number[] = [];
      for (let e = Math.ceil(l0 - 1e-9); e <= Math.floor(l1 + 1e-9); e++) {
        out.push(Math.pow(10, e));
      }
      if (out.length < 2) {
        return [d0, d1];
      }
      return out;
    },
  };
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!(lo <= hi)) {
    return [0, 1];
  }
  return [lo, hi];
}

export function padded(e: [number, number], frac = 0.05): [number, number] {
  const span = e[1] - e[0] || Math.abs(e[0]) || 1;
  return [e[0] - frac * span, e[1] + frac * span];
}

export function formatTick(v: number, kind: AxisKind): string {
  if (kind === "log") {
    const e = Math.round(Math.log10(v));
    if (Math.abs(v - Math.pow(10, e)) < 1e-9 * v) {
      return `1e${e}`;
    }
  }
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}
