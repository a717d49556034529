/** SVG charts rendered from explanation JSON.
 *
 * The service supplies base value, per-feature attributions, and the
 * cumulative waterfall walk; this module only maps those numbers onto
 * pixels and never recomputes them (rendered labels are display-rounded).
 */

import { formatValue, WaterfallStep } from "./api.js";

const WIDTH = 640;
const BAR_H = 22;
const GAP = 6;
const LABEL_W = 260;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function scale(lo: number, hi: number, x: number, width: number): number {
  if (hi <= lo) {
    return 0;
  }
  return ((x - lo) / (hi - lo)) * width;
}

/** Horizontal waterfall from the base value to the prediction. */
export function waterfallSvg(
  baseValue: number,
  steps: WaterfallStep[],
  prediction: number,
): string {
  const shown = steps.slice(0, 10);
  const points = [baseValue, ...shown.map((s) => s.cumulative)];
  const lo = Math.min(...points);
  const hi = Math.max(...points);
  const plotW = WIDTH - LABEL_W - 90;
  const height = (shown.length + 2) * (BAR_H + GAP) + 14;
  const endpoint = shown.length ? shown[shown.length - 1].cumulative : baseValue;

  const rows: string[] = [];
  let y = 8;
  rows.push(
    `<text x="${LABEL_W - 8}" y="${y + 15}" text-anchor="end" class="wf-label">base value</text>`,
    `<line x1="${LABEL_W + scale(lo, hi, baseValue, plotW)}" y1="${y}" ` +
      `x2="${LABEL_W + scale(lo, hi, baseValue, plotW)}" y2="${y + BAR_H}" class="wf-base"/>`,
    `<text x="${LABEL_W + scale(lo, hi, baseValue, plotW) + 6}" y="${y + 15}" class="wf-value">` +
      `${formatValue(baseValue)}</text>`,
  );
  y += BAR_H + GAP;

  let prev = baseValue;
  for (const step of shown) {
    const x0 = LABEL_W + scale(lo, hi, Math.min(prev, step.cumulative), plotW);
    const w = Math.max(1, Math.abs(scale(lo, hi, step.cumulative, plotW) - scale(lo, hi, prev, plotW)));
    const cls = step.shap >= 0 ? "wf-up" : "wf-down";
    rows.push(
      `<text x="${LABEL_W - 8}" y="${y + 15}" text-anchor="end" class="wf-label">${esc(step.feature)}</text>`,
      `<rect x="${x0}" y="${y}" width="${w}" height="${BAR_H}" class="${cls}"/>`,
      `<text x="${LABEL_W + scale(lo, hi, step.cumulative, plotW) + 6}" y="${y + 15}" class="wf-value">` +
        `${step.shap >= 0 ? "+" : ""}${formatValue(step.shap)}</text>`,
    );
    prev = step.cumulative;
    y += BAR_H + GAP;
  }

  rows.push(
    `<text x="${LABEL_W - 8}" y="${y + 15}" text-anchor="end" class="wf-label">prediction</text>`,
    `<line x1="${LABEL_W + scale(lo, hi, endpoint, plotW)}" y1="${y}" ` +
      `x2="${LABEL_W + scale(lo, hi, endpoint, plotW)}" y2="${y + BAR_H}" class="wf-base"/>`,
    `<text x="${LABEL_W + scale(lo, hi, endpoint, plotW) + 6}" y="${y + 15}" class="wf-value wf-endpoint">` +
      `${formatValue(endpoint)}</text>`,
  );

  return (
    `<svg viewBox="0 0 ${WIDTH} ${height}" class="waterfall" role="img" ` +
    `data-endpoint="${formatValue(endpoint)}" data-prediction="${formatValue(prediction)}">` +
    rows.join("") +
    `</svg>`
  );
}

/** Signed bar chart of the top attributions, largest |shap| first. */
export function barChartSvg(features: { feature: string; shap: number }[]): string {
  const shown = [...features]
    .sort((a, b) => Math.abs(b.shap) - Math.abs(a.shap) || a.feature.localeCompare(b.feature))
    .slice(0, 5);
  const maxAbs = Math.max(...shown.map((f) => Math.abs(f.shap)), 1e-12);
  const plotW = WIDTH - LABEL_W - 90;
  const mid = LABEL_W + plotW / 2;
  const height = shown.length * (BAR_H + GAP) + 14;

  const rows: string[] = [];
  let y = 8;
  for (const f of shown) {
    const w = (Math.abs(f.shap) / maxAbs) * (plotW / 2);
    const x0 = f.shap >= 0 ? mid : mid - w;
    const cls = f.shap >= 0 ? "wf-up" : "wf-down";
    rows.push(
      `<text x="${LABEL_W - 8}" y="${y + 15}" text-anchor="end" class="wf-label">${esc(f.feature)}</text>`,
      `<rect x="${x0}" y="${y}" width="${Math.max(1, w)}" height="${BAR_H}" class="${cls}" ` +
        `data-feature="${esc(f.feature)}"/>`,
      `<text x="${f.shap >= 0 ? mid + w + 6 : mid - w - 6}" y="${y + 15}" ` +
        `text-anchor="${f.shap >= 0 ? "start" : "end"}" class="wf-value">${formatValue(f.shap)}</text>`,
    );
    y += BAR_H + GAP;
  }
  rows.push(`<line x1="${mid}" y1="4" x2="${mid}" y2="${height - 4}" class="wf-base"/>`);

  return (
    `<svg viewBox="0 0 ${WIDTH} ${height}" class="barchart" role="img" ` +
    `data-order="${shown.map((f) => esc(f.feature)).join("|")}">` +
    rows.join("") +
    `</svg>`
  );
}
