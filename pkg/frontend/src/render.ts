/** HTML renderers: pure functions from state to markup strings. */

import { formatValue } from "./api.js";
import { barChartSvg, waterfallSvg } from "./charts.js";
import { FieldState, fieldError, FormModel, formValid, OTHER_CHOICE } from "./form.js";
import { Dashboard, ResultView } from "./state.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function renderField(field: FieldState, index: number): string {
  const name = esc(field.column.name);
  const error = fieldError(field);
  const errorHtml = error ? `<span class="field-error">${esc(error)}</span>` : "";
  if (field.column.kind === "categorical") {
    const levels = field.column.levels ?? [];
    const options = levels
      .map(
        (level) =>
          `<option value="${esc(level)}"${level === field.choice ? " selected" : ""}>` +
          `${esc(level)}</option>`,
      )
      .join("");
    const otherSelected = field.choice === OTHER_CHOICE ? " selected" : "";
    const otherInput =
      field.choice === OTHER_CHOICE
        ? `<input type="text" data-field="${index}" data-role="other" ` +
          `value="${esc(field.otherText)}" placeholder="unseen level"/>`
        : "";
    return (
      `<label class="field"><span class="field-name">${name}</span>` +
      `<select data-field="${index}" data-role="choice">${options}` +
      `<option value="${OTHER_CHOICE}"${otherSelected}>other / unseen</option>` +
      `</select>${otherInput}${errorHtml}</label>`
    );
  }
  return (
    `<label class="field"><span class="field-name">${name}</span>` +
    `<input type="text" inputmode="decimal" data-field="${index}" data-role="numeric" ` +
    `value="${esc(field.text)}"/>${errorHtml}</label>`
  );
}

export function renderForm(form: FormModel, busy: boolean): string {
  const fields = form.fields.map(renderField).join("");
  const disabled = busy || !formValid(form) ? " disabled" : "";
  return (
    `<form id="predict-form">${fields}` +
    `<div class="actions">` +
    `<label><input type="checkbox" id="with-explanation" checked/> explain</label>` +
    `<label><input type="checkbox" id="with-summary"/> clinical summary</label>` +
    `<button type="submit" id="submit"${disabled}>predict</button>` +
    `</div></form>`
  );
}

function badge(view: ResultView): string {
  // class and text bind to the server's label, never recomputed client-side
  const cls = view.label === "Resistant" ? "badge resistant" : "badge sensitive";
  return (
    `<span class="${cls}" data-label="${esc(view.label)}">${esc(view.label)}` +
    `<small> (threshold ${formatValue(view.threshold)})</small></span>`
  );
}

function summaryPanel(view: ResultView): string {
  switch (view.summary.kind) {
    case "idle":
      return "";
    case "loading":
      return `<div class="summary loading" data-summary-state="loading">fetching summary…</div>`;
    case "text":
      return `<div class="summary" data-summary-state="text"><h4>Clinical summary</h4><p>${esc(view.summary.text)}</p></div>`;
    case "unavailable":
      return (
        `<div class="summary unavailable" data-summary-state="unavailable">` +
        `summary unavailable <small>${esc(view.summary.detail)}</small></div>`
      );
  }
}

export function renderResult(view: ResultView): string {
  const parts = [
    `<div class="prediction">` +
      `<span class="value" data-prediction="${formatValue(view.prediction)}">` +
      `${formatValue(view.prediction)}</span> ${badge(view)}</div>`,
  ];
  if (view.waterfall && view.baseValue !== null) {
    parts.push(
      `<h4>From base value to prediction</h4>`,
      waterfallSvg(view.baseValue, view.waterfall, view.prediction),
    );
  }
  if (view.topFeatures) {
    parts.push(`<h4>Top drivers</h4>`, barChartSvg(view.topFeatures));
  }
  parts.push(summaryPanel(view));
  return `<section class="result" data-request="${esc(view.requestId)}">${parts.join("")}</section>`;
}

export function renderHistory(history: ResultView[]): string {
  if (history.length < 2) {
    return "";
  }
  const rows = history
    .map((view, i) => {
      const delta =
        i + 1 < history.length
          ? ` <span class="delta">(${formatValue(view.prediction - history[i + 1].prediction)} vs previous)</span>`
          : "";
      return (
        `<li data-request="${esc(view.requestId)}">` +
        `${formatValue(view.prediction)} — ${esc(view.label)}${delta}</li>`
      );
    })
    .join("");
  return `<h4>Session history</h4><ol class="history">${rows}</ol>`;
}

export function renderApp(app: Dashboard): string {
  if (app.banner) {
    return (
      `<div class="banner" id="banner">${esc(app.banner)} ` +
      `<button id="retry">retry</button></div>`
    );
  }
  if (!app.form) {
    return `<div class="banner">loading schema…</div>`;
  }
  const parts = [renderForm(app.form, app.busy)];
  if (app.submitError) {
    parts.push(`<div class="submit-error">${esc(app.submitError)}</div>`);
  }
  if (app.history.length) {
    parts.push(renderResult(app.history[0]));
    parts.push(renderHistory(app.history));
  }
  return parts.join("");
}
