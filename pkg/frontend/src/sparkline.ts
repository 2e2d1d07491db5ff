// Inline SVG sparkline of a per-step IoU series with drop/recovery markers.

import type { DropFlagInfo } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderSparkline(
  series: (number | null)[],
  drops: DropFlagInfo[],
  width = 220,
  height = 48,
): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "sparkline");
  const pad = 6;
  const n = Math.max(series.length - 1, 1);
  const x = (i: number) => pad + (i / n) * (width - 2 * pad);
  const y = (v: number) => height - pad - v * (height - 2 * pad);

  const points = series
    .map((v, i) => (v === null ? null : `${x(i)},${y(v)}`))
    .filter((p): p is string => p !== null);
  if (points.length > 1) {
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", points.join(" "));
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", "currentColor");
    line.setAttribute("stroke-width", "1.5");
    svg.appendChild(line);
  }
  series.forEach((v, i) => {
    if (v === null) return;
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(x(i)));
    dot.setAttribute("cy", String(y(v)));
    dot.setAttribute("r", "2");
    dot.setAttribute("data-step", String(i));
    dot.setAttribute("data-iou", String(v));
    svg.appendChild(dot);
  });
  for (const drop of drops) {
    const marker = document.createElementNS(SVG_NS, "circle");
    const i = drop.step + 1; // the step the series lands on
    const v = drop.iou_after;
    marker.setAttribute("cx", String(x(i)));
    marker.setAttribute("cy", String(y(v)));
    marker.setAttribute("r", "4");
    marker.setAttribute("fill", "none");
    marker.setAttribute("stroke", drop.kind === "drop" ? "#d33" : "#d90");
    marker.setAttribute("stroke-width", "2");
    marker.setAttribute("class", `flag ${drop.kind}`);
    marker.setAttribute("data-flag-step", String(drop.step));
    svg.appendChild(marker);
  }
  return svg;
}
