/** Payload shapes served by the API under /v1/. */

export interface BitView {
  condition: string;
  active: number;
}

export interface FeatureView {
  name: string;
  value: number | string | null;
  bits: BitView[];
}

export interface ActiveTerm {
  column: number;
  condition: string;
  points: number;
}

export interface SubscaleBreakdown {
  name: string;
  raw_score: number;
  probability: number;
  weight: number;
  contribution: number;
  active_terms: ActiveTerm[];
}

export interface BreakdownPayload {
  final_probability: number;
  final_score: number;
  bias: number;
  subscales: SubscaleBreakdown[];
  features: FeatureView[];
}

export interface FactorPayload {
  condition: string;
  subscale: string;
  subscale_rank: number;
  points: number;
  subscale_points: number;
}

export interface RulePayload {
  predicates: string[];
  label: number;
  label_text: string;
  support: number;
  support_fraction: number;
  sparsity: number;
  rendered: string;
}

export interface CasePayload {
  id: number;
  risk_prediction: string;
  true_label: string;
  similarity: number;
  values: Record<string, number | string | null>;
}

export interface ExplanationPayload {
  prediction: BreakdownPayload;
  factors: FactorPayload[];
  rule: RulePayload | null;
  rule_warning: string | null;
  cases: CasePayload[];
}

export interface SpecialValueSpec {
  code: number;
  meaning: string;
}

export interface FeatureSpecView {
  name: string;
  kind: "numeric" | "categorical";
  monotonicity: "increasing" | "decreasing" | "none";
  subscale: string;
  special_values: SpecialValueSpec[];
}

export interface ScoreTableRow {
  condition: string;
  points: number;
}

export interface SubscaleView {
  name: string;
  bias: number;
  weight: number;
  features: string[];
  score_tables: { feature: string; rows: ScoreTableRow[] }[];
}

export interface ModelPayload {
  fingerprint: string;
  bias: number;
  alpha: number[];
  decision_threshold: number;
  subscales: SubscaleView[];
  schema: {
    label: string;
    positive_means: string;
    features: FeatureSpecView[];
  };
}

export type FeatureInputs = Record<string, number | string>;
