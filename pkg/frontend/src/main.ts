/** DOM wiring: render into #app and translate events into state changes. */

import { ApiClient } from "./api.js";
import { formValid, OTHER_CHOICE } from "./form.js";
import { renderApp } from "./render.js";
import { Dashboard } from "./state.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const app = new Dashboard(new ApiClient(""), () => {
  render();
});

let withExplanation = true;
let withSummary = false;

function render(): void {
  const el = root as HTMLElement;
  el.innerHTML = renderApp(app);

  el.querySelector("#retry")?.addEventListener("click", () => {
    void app.loadSchema();
  });

  const form = el.querySelector<HTMLFormElement>("#predict-form");
  if (!form) {
    return;
  }
  const explain = form.querySelector<HTMLInputElement>("#with-explanation");
  const summary = form.querySelector<HTMLInputElement>("#with-summary");
  if (explain) {
    explain.checked = withExplanation;
    explain.addEventListener("change", () => {
      withExplanation = explain.checked;
    });
  }
  if (summary) {
    summary.checked = withSummary;
    summary.addEventListener("change", () => {
      withSummary = summary.checked;
    });
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void app.run({ withExplanation, withSummary });
  });

  form.querySelectorAll<HTMLElement>("[data-field]").forEach((input) => {
    const index = Number(input.dataset.field);
    const role = input.dataset.role;
    const handler = () => {
      const field = app.form?.fields[index];
      if (!field) {
        return;
      }
      if (role === "choice") {
        field.choice = (input as HTMLSelectElement).value;
        if (field.choice !== OTHER_CHOICE) {
          field.otherText = "";
        }
        render(); // the "other" text input appears/disappears
      } else if (role === "other") {
        field.otherText = (input as HTMLInputElement).value;
        refreshSubmit();
      } else {
        field.text = (input as HTMLInputElement).value;
        refreshSubmit();
      }
    };
    input.addEventListener(role === "choice" ? "change" : "input", handler);
  });

  function refreshSubmit(): void {
    // re-render only the disabled state to keep focus in the active input
    const btn = el.querySelector<HTMLButtonElement>("#submit");
    if (btn && app.form) {
      import("./form.js").then(({ formValid }) => {
        btn.disabled = app.busy || !formValid(app.form!);
      });
    }
  }
}

render();
void app.loadSchema();
