/** Minimal SVG assembly: figures are plain markup strings, no DOM. */

import { AxisKind, Scale, formatTick } from "./scale.js";

export const WIDTH = 760;
export const HEIGHT = 520;
export const MARGIN = { left: 70, right: 24, top: 40, bottom: 56 };

export interface Mark {
  toSvg(): string;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function circle(x: number, y: number, r: number, fill: string, opacity = 1): string {
  return `<circle cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" r="${r}" fill="${fill}" fill-opacity="${opacity}"/>`;
}

export function polyline(pts: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): string {
  const d = pts.map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)} ${y.toFixed(2)}`).join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<path d="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`;
}

export function hline(y: number, x0: number, x1: number, stroke: string, dash = "6 3"): string {
  return polyline(
    [
      [x0, y],
      [x1, y],
    ],
    stroke,
    1.2,
    dash,
  );
}

export function text(x: number, y: number, s: string, size = 12, anchor = "start", fill = "#222"): string {
  return `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}" font-family="sans-serif">${esc(s)}</text>`;
}

export function axes(xs: Scale, ys: Scale, xlabel: string, ylabel: string): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(polyline([[x0, y0], [x1, y0]], "#333", 1));
  parts.push(polyline([[x0, y0], [x0, y1]], "#333", 1));
  for (const t of xs.ticks()) {
    const px = xs.map(t);
    if (px < x0 - 0.5 || px > x1 + 0.5) continue;
    parts.push(polyline([[px, y0], [px, y0 + 5]], "#333", 1));
    parts.push(text(px, y0 + 20, formatTick(t, xs.kind), 11, "middle"));
  }
  for (const t of ys.ticks()) {
    const py = ys.map(t);
    if (py > y0 + 0.5 || py < y1 - 0.5) continue;
    parts.push(polyline([[x0 - 5, py], [x0, py]], "#333", 1));
    parts.push(text(x0 - 8, py + 4, formatTick(t, ys.kind), 11, "end"));
    parts.push(polyline([[x0, py], [x1, py]], "#eee", 0.6));
  }
  parts.push(text((x0 + x1) / 2, HEIGHT - 14, xlabel, 13, "middle"));
  parts.push(
    `<g transform="rotate(-90 16 ${(y0 + y1) / 2})">` +
      text(16, (y0 + y1) / 2, ylabel, 13, "middle") +
      "</g>",
  );
  return parts.join("\n");
}

export function document(title: string, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    text(MARGIN.left, 22, title, 15, "start"),
    ...body,
    "</svg>",
  ].join("\n");
}

export function plotArea(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}
