import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type {
  BreakdownPayload,
  ExplanationPayload,
  FeatureInputs,
  ModelPayload,
} from "../src/types";

const here = dirname(fileURLToPath(import.meta.url));
const fixtures = join(here, "..", "..", "data", "fixtures");

function load<T>(...parts: string[]): T {
  return JSON.parse(readFileSync(join(fixtures, ...parts), "utf-8")) as T;
}

/** Golden payloads shared with the API test suite and the CLI. */
export const golden = {
  model: (): ModelPayload => load("golden", "model.json"),
  demo1Predict: (): BreakdownPayload => load("golden", "demo1_predict.json"),
  demo1Explain: (): ExplanationPayload => load("golden", "demo1_explain.json"),
  observation6Explain: (): ExplanationPayload =>
    load("golden", "observation6_explain.json"),
  outlierExplain: (): ExplanationPayload => load("golden", "outlier_explain.json"),
  demo1Features: (): FeatureInputs =>
    load<{ features: FeatureInputs }>("demo1.json").features,
  observation6Features: (): FeatureInputs =>
    load<{ features: FeatureInputs }>("observation6.json").features,
};

export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}
