/** Typed client for the prediction service's JSON API. */

export interface SchemaColumn {
  name: string;
  kind: "categorical" | "numeric";
  levels?: string[];
  default?: string | number;
}

export interface SchemaDoc {
  columns: SchemaColumn[];
  target_column: string;
  threshold: number;
}

export interface ResponseCall {
  label: string;
  threshold: number;
}

export interface PredictResponse {
  request_id: string | null;
  predicted_ln_ic50: number;
  response: ResponseCall;
}

export interface Contribution {
  feature: string;
  shap: number;
  value?: number;
}

export interface WaterfallStep {
  feature: string;
  shap: number;
  cumulative: number;
}

export interface ExplainResponse extends PredictResponse {
  explanation: {
    base_value: number;
    prediction: number;
    contributions: Contribution[];
  };
  waterfall: WaterfallStep[];
}

export interface ReportResponse extends PredictResponse {
  report: {
    drug_name: string;
    top_features: { feature: string; shap: number }[];
    summary_text?: string;
  };
  summary_status: "ok" | "unavailable" | "skipped";
  summary_error?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FeatureMap = Record<string, string | number>;

export class ApiClient {
  constructor(
    private base = "",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async get<T>(path: string): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path);
    } catch (err) {
      throw new ApiError(0, "unreachable", String(err));
    }
    return this.unwrap<T>(resp);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "unreachable", String(err));
    }
    return this.unwrap<T>(resp);
  }

  private async unwrap<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
      let code = "http_error";
      let message = `HTTP ${resp.status}`;
      try {
        const doc = await resp.json();
        code = doc.code ?? code;
        message = doc.message ?? message;
      } catch {
        // non-JSON error body; keep the defaults
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  getSchema(): Promise<SchemaDoc> {
    return this.get<SchemaDoc>("/schema");
  }

  predict(features: FeatureMap, requestId: string): Promise<PredictResponse> {
    return this.post<PredictResponse>("/predict", {
      request_id: requestId,
      features,
    });
  }

  explain(features: FeatureMap, requestId: string): Promise<ExplainResponse> {
    return this.post<ExplainResponse>("/explain", {
      request_id: requestId,
      features,
    });
  }

  report(
    features: FeatureMap,
    requestId: string,
    summarize: boolean,
  ): Promise<ReportResponse> {
    return this.post<ReportResponse>("/report", {
      request_id: requestId,
      features,
      summarize,
    });
  }
}

/** All model numbers render through this: display rounding only. */
export function formatValue(x: number): string {
  return x.toFixed(4);
}
