"""Wire-format payloads shared by the HTTP service and the CLI's
structured output mode, so both surfaces serve identical documents."""

from __future__ import annotations

from typing import Mapping

from .cases import CaseMatch
from .factors import RiskFactor
from .riskmodel import PredictionBreakdown, TwoLayerModel, model_document, model_fingerprint
from .rules import ExplainContext, Rule


def breakdown_payload(
    model: TwoLayerModel,
    x: Mapping[str, object],
    breakdown: PredictionBreakdown,
) -> dict:
    bits = breakdown.encoded_bits
    features = []
    for spec in model.schema.features:
        cols = model.scheme.feature_columns(spec.name)
        features.append(
            {
                "name": spec.name,
                "value": _plain(x.get(spec.name)),
                "bits": [
                    {"condition": c.describe(), "active": int(bits[c.index])} for c in cols
                ],
            }
        )
    return {
        "final_probability": breakdown.final_probability,
        "final_score": breakdown.final_score,
        "bias": breakdown.bias,
        "subscales": [
            {
                "name": s.name,
                "raw_score": s.raw_score,
                "probability": s.probability,
                "weight": s.weight,
                "contribution": s.contribution,
                "active_terms": [
                    {"column": t.column_index, "condition": t.condition, "points": t.points}
                    for t in s.active_terms
                ],
            }
            for s in breakdown.subscales
        ],
        "features": features,
    }


def factors_payload(factors: list[RiskFactor]) -> list[dict]:
    return [
        {
            "condition": f.condition,
            "subscale": f.subscale,
            "subscale_rank": f.subscale_rank,
            "points": f.points,
            "subscale_points": f.subscale_points,
        }
        for f in factors
    ]


def rule_payload(rule: Rule, ctx: ExplainContext) -> dict:
    return {
        "predicates": rule.predicates(ctx),
        "label": rule.label,
        "label_text": ctx.label_text(rule.label),
        "support": rule.support,
        "support_fraction": rule.support / ctx.n_rows if ctx.n_rows else 0.0,
        "sparsity": rule.sparsity,
        "rendered": rule.render(ctx),
    }


def cases_payload(cases: list[CaseMatch], ctx: ExplainContext) -> list[dict]:
    return [
        {
            "id": c.row_index,
            "risk_prediction": ctx.label_text(c.prediction),
            "true_label": ctx.label_text(c.true_label),
            "similarity": c.similarity,
            "values": {k: _plain(v) for k, v in c.display_values.items()},
        }
        for c in cases
    ]


def model_payload(model: TwoLayerModel, threshold: float) -> dict:
    """Full transparency dump; carries the complete model document so a
    client can reconstruct an equivalent model."""
    subscales = []
    for sub, a in zip(model.subscales, model.alpha):
        feature_names = []
        for i in sub.column_indices:
            name = model.scheme.columns[int(i)].feature
            if name not in feature_names:
                feature_names.append(name)
        subscales.append(
            {
                "name": sub.name,
                "bias": float(sub.bias),
                "weight": float(a),
                "features": feature_names,
                "score_tables": [
                    {"feature": name, "rows": model.score_table(name).rows()}
                    for name in feature_names
                ],
            }
        )
    return {
        "fingerprint": model_fingerprint(model),
        "bias": float(model.bias),
        "alpha": [float(a) for a in model.alpha],
        "decision_threshold": threshold,
        "subscales": subscales,
        "schema": {
            "label": model.schema.label_name,
            "positive_means": model.schema.positive_label_meaning,
            "features": [
                {
                    "name": f.name,
                    "kind": f.kind,
                    "monotonicity": f.monotonicity,
                    "subscale": f.subscale,
                    "special_values": [
                        {"code": sv.code, "meaning": sv.meaning} for sv in f.special_values
                    ],
                }
                for f in model.schema.features
            ],
        },
        "model": model_document(model),
    }


def _plain(v):
    if v is None:
        return None
    if isinstance(v, (int, str, bool)):
        return v
    f = float(v)
    return int(f) if f.is_integer() else f
