/** Dashboard state machine.
 *
 * One in-flight prediction at a time; responses carry the request id they
 * answer and anything stale is discarded. Results accumulate in a
 * session-only history (newest first) so successive what-if runs can be
 * compared. The summary panel follows idle -> loading -> text/unavailable
 * and never blocks the prediction from rendering.
 */

import {
  ApiClient,
  ApiError,
  FeatureMap,
  SchemaDoc,
  WaterfallStep,
} from "./api.js";
import { buildForm, FormModel, formValues, mergeForm } from "./form.js";

export type SummaryState =
  | { kind: "idle" }
  | { kind: "loading" }
  | { kind: "text"; text: string }
  | { kind: "unavailable"; detail: string };

export interface ResultView {
  requestId: string;
  prediction: number;
  label: string;
  threshold: number;
  baseValue: number | null;
  waterfall: WaterfallStep[] | null;
  topFeatures: { feature: string; shap: number }[] | null;
  summary: SummaryState;
}

export interface RunOptions {
  withExplanation: boolean;
  withSummary: boolean;
}

export class Dashboard {
  schema: SchemaDoc | null = null;
  form: FormModel | null = null;
  /** connection banner text; null when the API is reachable */
  banner: string | null = null;
  /** inline field-level error from a rejected submission */
  submitError: string | null = null;
  history: ResultView[] = [];
  busy = false;

  private seq = 0;
  private currentRequest: string | null = null;

  constructor(
    private api: ApiClient,
    private onChange: () => void = () => {},
  ) {}

  async loadSchema(): Promise<boolean> {
    try {
      const schema = await this.api.getSchema();
      this.schema = schema;
      // prior entries survive a reload where columns still match
      this.form = this.form ? mergeForm(this.form, schema) : buildForm(schema);
      this.banner = null;
      this.onChange();
      return true;
    } catch (err) {
      this.banner = `service unreachable: ${(err as Error).message}`;
      this.onChange();
      return false;
    }
  }

  private isCurrent(requestId: string): boolean {
    return this.currentRequest === requestId;
  }

  async run(options: RunOptions): Promise<ResultView | null> {
    if (!this.form || this.busy) {
      return null;
    }
    const features = formValues(this.form);
    if (features === null) {
      this.submitError = "form has invalid fields";
      this.onChange();
      return null;
    }

    const requestId = `req-${++this.seq}`;
    this.currentRequest = requestId;
    this.busy = true;
    this.submitError = null;
    this.onChange();

    let view: ResultView;
    try {
      const predicted = await this.api.predict(features, requestId);
      view = {
        requestId,
        prediction: predicted.predicted_ln_ic50,
        label: predicted.response.label,
        threshold: predicted.response.threshold,
        baseValue: null,
        waterfall: null,
        topFeatures: null,
        summary: { kind: options.withSummary ? "loading" : "idle" },
      };
    } catch (err) {
      this.busy = false;
      if (this.isCurrent(requestId)) {
        this.submitError =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        this.onChange();
      }
      return null;
    }

    if (!this.isCurrent(requestId)) {
      this.busy = false;
      return null; // a newer submission superseded this one
    }
    // prediction renders immediately; charts and summary fill in after
    this.history.unshift(view);
    this.busy = false;
    this.onChange();

    const extras: Promise<void>[] = [];
    if (options.withExplanation) {
      extras.push(this.fetchExplanation(features, requestId, view));
    }
    if (options.withSummary) {
      extras.push(this.fetchSummary(features, requestId, view));
    }
    await Promise.all(extras);
    return view;
  }

  private async fetchExplanation(
    features: FeatureMap,
    requestId: string,
    view: ResultView,
  ): Promise<void> {
    try {
      const doc = await this.api.explain(features, requestId);
      if (!this.isCurrent(requestId)) {
        return;
      }
      view.baseValue = doc.explanation.base_value;
      view.waterfall = doc.waterfall;
      view.topFeatures = doc.explanation.contributions.map((c) => ({
        feature: c.feature,
        shap: c.shap,
      }));
    } catch {
      // prediction stands on its own; charts simply stay absent
    }
    this.onChange();
  }

  private async fetchSummary(
    features: FeatureMap,
    requestId: string,
    view: ResultView,
  ): Promise<void> {
    try {
      const doc = await this.api.report(features, requestId, true);
      if (!this.isCurrent(requestId)) {
        return;
      }
      if (doc.summary_status === "ok" && doc.report.summary_text) {
        view.summary = { kind: "text", text: doc.report.summary_text };
      } else {
        view.summary = {
          kind: "unavailable",
          detail: doc.summary_error ?? "summary unavailable",
        };
      }
      if (view.topFeatures === null) {
        view.topFeatures = doc.report.top_features;
      }
    } catch (err) {
      if (this.isCurrent(requestId)) {
        view.summary = { kind: "unavailable", detail: String(err) };
      }
    }
    this.onChange();
  }
}
