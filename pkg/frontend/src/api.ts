import type {
  BreakdownPayload,
  ExplanationPayload,
  FeatureInputs,
  ModelPayload,
} from "./types";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

/** Thin typed client for the /v1 endpoints. */
export class LensClient {
  constructor(private readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.base + path);
    if (!res.ok) throw new ApiError(await res.text(), res.status);
    return (await res.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(await res.text(), res.status);
    return (await res.json()) as T;
  }

  model(): Promise<ModelPayload> {
    return this.get("/v1/model");
  }

  predict(features: FeatureInputs): Promise<BreakdownPayload> {
    return this.post("/v1/predict", { features });
  }

  explain(features: FeatureInputs): Promise<ExplanationPayload> {
    return this.post("/v1/explain", { features });
  }

  preset(name: string): Promise<{ features: FeatureInputs }> {
    return this.get(`presets/${name}.json`);
  }
}
