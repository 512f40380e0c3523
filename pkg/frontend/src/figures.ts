/**
 * Per-experiment figure builders.  Everything numerical (fits, constants,
 * bounds, quantile pairs) is computed by the simulation engine and read
 * from the CSV; this layer only draws.
 */

import { Row, byStatistic, statisticNames } from "./schema.js";
import { Scale, extent, linearScale, logScale, padded } from "./scale.js";
import { WIDTH, MARGIN, axes, circle, document as svgDoc, hline, plotArea, polyline, text } from "./svg.js";

const COLORS = ["#1f6fb4", "#d1495b", "#2e8b57", "#8e6bbf", "#c98a00", "#444444"];

// predicted liminf constants for the E7 overlay (d = 1, 2, >=3); reference
// rows in the CSV take precedence when present
export const LIL_REFERENCE_CONSTANTS: Record<number, number> = {
  1: 1.4135,
  2: 0.4431,
  3: 0.7982,
};

export class FigureDataError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FigureDataError";
  }
}

function series(rows: Row[], stat: string, key: (r: Row) => number = (r) => r.n): Array<[number, number]> {
  return byStatistic(rows, stat)
    .map((r): [number, number] => [key(r), r.value])
    .sort((a, b) => a[0] - b[0]);
}

function qqFigure(experiment: string, rows: Row[]): string {
  const names = [...statisticNames(rows)];
  const tags = names
    .filter((s) => s.startsWith("qq_theory"))
    .map((s) => s.slice("qq_theory".length))
    .sort();
  if (tags.length === 0) {
    throw new FigureDataError(`${experiment}: no qq_theory/qq_sample rows`);
  }
  const area = plotArea();
  const allX: number[] = [];
  const allY: number[] = [];
  const perTag: Array<{ tag: string; pts: Array<[number, number]> }> = [];
  for (const tag of tags) {
    const theory = new Map(byStatistic(rows, `qq_theory${tag}`).map((r) => [r.replicate, r.value]));
    const sample = new Map(byStatistic(rows, `qq_sample${tag}`).map((r) => [r.replicate, r.value]));
    const pts: Array<[number, number]> = [];
    for (const [rep, tx] of theory) {
      const sy = sample.get(rep);
      if (sy !== undefined) {
        pts.push([tx, sy]);
        allX.push(tx);
        allY.push(sy);
      }
    }
    pts.sort((a, b) => a[0] - b[0]);
    perTag.push({ tag, pts });
  }
  const xs = linearScale(padded(extent(allX)), area.x);
  const ys = linearScale(padded(extent(allY)), area.y);
  const body: string[] = [axes(xs, ys, "reference quantiles", "sample quantiles")];
  const lo = Math.max(xs.domain[0], ys.domain[0]);
  const hi = Math.min(xs.domain[1], ys.domain[1]);
  body.push(
    polyline(
      [
        [xs.map(lo), ys.map(lo)],
        [xs.map(hi), ys.map(hi)],
      ],
      "#999",
      1,
      "4 3",
    ),
  );
  perTag.forEach(({ tag, pts }, i) => {
    const color = COLORS[i % COLORS.length];
    for (const [x, y] of pts) {
      body.push(circle(xs.map(x), ys.map(y), 1.6, color, 0.55));
    }
    const label = tag ? `t = ${Number(tag.replace("_t", "")) / 100}` : "sample";
    body.push(text(MARGIN.left + 10, MARGIN.top + 16 + 16 * i, label, 12, "start", color));
  });
  return svgDoc(`${experiment}: quantile-quantile`, body);
}

function slopeFigure(experiment: string, rows: Row[], stats: string[], ylabel: string): string {
  const present = stats.filter((s) => byStatistic(rows, s).length > 0);
  if (present.length === 0) {
    throw new FigureDataError(`${experiment}: none of ${stats.join(", ")} present`);
  }
  const area = plotArea();
  const groups: Array<{ label: string; pts: Array<[number, number]> }> = [];
  for (const stat of present) {
    const ds = [...new Set(byStatistic(rows, stat).map((r) => r.d))].sort();
    for (const d of ds) {
      const pts = byStatistic(rows, stat)
        .filter((r) => r.d === d && r.replicate === -1 && r.value > 0)
        .map((r): [number, number] => [r.n, r.value])
        .sort((a, b) => a[0] - b[0]);
      if (pts.length >= 2) {
        groups.push({ label: `${stat} d=${d}`, pts });
      }
    }
  }
  if (groups.length === 0) {
    throw new FigureDataError(`${experiment}: no positive aggregate series to draw`);
  }
  const allPts = groups.flatMap((g) => g.pts);
  const xs = logScale(extent(allPts.map((p) => p[0])), area.x);
  const ys = logScale(extent(allPts.map((p) => p[1])), area.y);
  const body: string[] = [axes(xs, ys, "n", ylabel)];
  groups.forEach((g, i) => {
    const color = COLORS[i % COLORS.length];
    body.push(polyline(g.pts.map(([x, y]) => [xs.map(x), ys.map(y)]), color, 1.8));
    for (const [x, y] of g.pts) {
      body.push(circle(xs.map(x), ys.map(y), 2.5, color));
    }
    body.push(text(MARGIN.left + 10, MARGIN.top + 16 + 16 * i, g.label, 12, "start", color));
  });
  // slope annotations come from the engine's fit rows
  const slopeRows = rows.filter((r) => r.statistic.startsWith("slope_") || r.statistic === "fit_slope");
  slopeRows.forEach((r, i) => {
    const label = r.statistic === "fit_slope" ? `fitted slope ${r.value.toFixed(3)}` : `${r.statistic} = ${r.value.toFixed(3)}`;
    body.push(text(WIDTH - MARGIN.right - 8, MARGIN.top + 16 + 14 * i, label, 12, "end", "#333"));
  });
  return svgDoc(`${experiment}: log-log scaling`, body);
}

function smallBallFigure(rows: Row[]): string {
  const emp = series(rows, "smallball_empirical", (r) => r.n / 100);
  if (emp.length === 0) {
    throw new FigureDataError("E6: no smallball_empirical rows");
  }
  const lower = series(rows, "smallball_lower", (r) => r.n / 100);
  const upper = series(rows, "smallball_upper", (r) => r.n / 100);
  const ciLo = series(rows, "smallball_ci_low", (r) => r.n / 100);
  const ciHi = series(rows, "smallball_ci_high", (r) => r.n / 100);
  const area = plotArea();
  const allY = [...emp, ...lower, ...upper, ...ciLo, ...ciHi].map((p) => p[1]).filter((v) => v > 0);
  const xs = linearScale(padded(extent(emp.map((p) => p[0])), 0.1), area.x);
  const ys = logScale(extent(allY), area.y);
  const body: string[] = [axes(xs, ys, "barrier y (units of sqrt t)", "P{ sup |gamma| < y }")];
  const draw = (pts: Array<[number, number]>, color: string, dash = "", label = "") =>
    pts.length &&
    body.push(polyline(pts.map(([x, y]) => [xs.map(x), ys.map(Math.max(y, ys.domain[0]))]), color, 1.6, dash));
  draw(lower, "#d1495b", "5 3");
  draw(upper, "#d1495b", "5 3");
  draw(emp, "#1f6fb4");
  emp.forEach(([x, y]) => body.push(circle(xs.map(x), ys.map(y), 3, "#1f6fb4")));
  for (let i = 0; i < ciLo.length && i < ciHi.length; i++) {
    const x = xs.map(ciLo[i][0]);
    body.push(
      polyline(
        [
          [x, ys.map(Math.max(ciLo[i][1], ys.domain[0]))],
          [x, ys.map(ciHi[i][1])],
        ],
        "#1f6fb4",
        1,
      ),
    );
  }
  body.push(text(MARGIN.left + 10, MARGIN.top + 16, "empirical with 99% CI", 12, "start", "#1f6fb4"));
  body.push(text(MARGIN.left + 10, MARGIN.top + 32, "sandwich bounds", 12, "start", "#d1495b"));
  return svgDoc("E6: small-ball bounds vs empirical", body);
}

function lilFigure(rows: Row[]): string {
  const dims = [...new Set(rows.filter((r) => r.statistic === "lil_r").map((r) => r.d))].sort();
  if (dims.length === 0) {
    throw new FigureDataError("E7: no lil_r rows");
  }
  const area = plotArea();
  const trajPts = rows.filter((r) => r.statistic === "lil_r" || r.statistic === "bm_chung_r");
  const xs = logScale(extent(trajPts.map((r) => r.n)), area.x);
  const yext = extent(trajPts.map((r) => r.value).filter((v) => v > 0));
  const refs = new Map<number, number>();
  for (const d of dims) {
    const row = rows.find((r) => r.statistic === "lil_reference" && r.d === d);
    refs.set(d, row ? row.value : LIL_REFERENCE_CONSTANTS[Math.min(d, 3)]);
  }
  const ys = logScale(
    [Math.min(yext[0], ...refs.values()) * 0.5, Math.max(yext[1], ...refs.values()) * 1.2],
    area.y,
  );
  const body: string[] = [axes(xs, ys, "n", "scaled running max of |H|")];
  dims.forEach((d, i) => {
    const color = COLORS[i % COLORS.length];
    const r = series(
      rows.filter((q) => q.d === d),
      "lil_r",
    );
    const rm = series(
      rows.filter((q) => q.d === d),
      "lil_runmin",
    );
    body.push(polyline(r.map(([x, y]) => [xs.map(x), ys.map(y)]), color, 1.4));
    body.push(polyline(rm.map(([x, y]) => [xs.map(x), ys.map(y)]), color, 1.2, "2 3"));
    const ref = refs.get(d)!;
    body.push(hline(ys.map(ref), xs.range[0], xs.range[1], color));
    body.push(text(MARGIN.left + 10, MARGIN.top + 16 + 16 * i, `d=${d} (reference ${ref.toFixed(4)})`, 12, "start", color));
  });
  const bm = series(rows, "bm_chung_r");
  if (bm.length) {
    const color = COLORS[(dims.length + 1) % COLORS.length];
    body.push(polyline(bm.map(([x, y]) => [xs.map(x), ys.map(y)]), color, 1.0, "6 2"));
    body.push(text(MARGIN.left + 10, MARGIN.top + 16 + 16 * dims.length, "standard BM sanity", 12, "start", color));
    const ref = rows.find((r) => r.statistic === "bm_chung_reference");
    if (ref) {
      body.push(hline(ys.map(ref.value), xs.range[0], xs.range[1], color, "2 5"));
    }
  }
  return svgDoc("E7: iterated-logarithm running minima", body);
}

function kappaFigure(rows: Row[]): string {
  const reps = byStatistic(rows, "i_over_n")
    .filter((r) => r.replicate >= 0)
    .sort((a, b) => a.replicate - b.replicate);
  if (reps.length === 0) {
    throw new FigureDataError("kappa: no i_over_n rows");
  }
  const area = plotArea();
  const xs = linearScale([0, reps.length - 1], area.x);
  const ys = linearScale(padded(extent(reps.map((r) => r.value)), 0.15), area.y);
  const body: string[] = [axes(xs, ys, "replicate", "I_n / n")];
  reps.forEach((r, i) => body.push(circle(xs.map(i), ys.map(r.value), 2.2, "#1f6fb4", 0.7)));
  const exact = rows.find((r) => r.statistic === "i_over_n_exact");
  if (exact) {
    body.push(hline(ys.map(exact.value), xs.range[0], xs.range[1], "#d1495b"));
    body.push(text(WIDTH - MARGIN.right - 8, MARGIN.top + 16, `exact truncated series ${exact.value.toFixed(5)}`, 12, "end", "#d1495b"));
  }
  const ks = rows.find((r) => r.statistic === "kappa_series");
  if (ks) {
    body.push(text(WIDTH - MARGIN.right - 8, MARGIN.top + 32, `kappa = ${ks.value.toFixed(6)}`, 12, "end", "#333"));
  }
  return svgDoc("kappa: Monte Carlo intersections vs exact series", body);
}

export function buildFigure(experiment: string, rows: Row[]): string {
  switch (experiment) {
    case "E1":
    case "E2":
    case "E3":
      return qqFigure(experiment, rows);
    case "E4":
      return slopeFigure(experiment, rows, ["rms_M", "rms_Xi2", "rms_N"], "RMS component size");
    case "E5":
      return slopeFigure(experiment, rows, ["median_coupling_error"], "median sup |L - l|");
    case "E6":
      return smallBallFigure(rows);
    case "E7":
      return lilFigure(rows);
    case "kappa":
      return kappaFigure(rows);
    default:
      throw new FigureDataError(`no figure defined for experiment ${experiment}`);
  }
}
