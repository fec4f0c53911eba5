"""The two-layer additive risk model: prediction, training, persistence.

The first layer scores each subscale (a named group of features) as a
sparse additive model over binary columns and squashes it to a
probability; the second layer combines subscale probabilities with
non-negative weights and squashes again.  Every number the model uses is
exposed in prediction breakdowns and in the saved model file, so any
score can be audited term by term.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from . import training
from .binarize import (
    BinarizationScheme,
    BinaryMatrix,
    encode,
    layout_columns,
    ScoreTable,
    to_two_sided,
)
from .data import DataError, Dataset, Schema, FeatureSpec, SpecialValue

MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for unreadable or version-mismatched model files."""


def sigmoid(z: float) -> float:
    """Numerically stable logistic function."""
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


@dataclass(frozen=True)
class SubscaleModel:
    """One first-layer mini-model over its owned binary columns."""

    name: str
    column_indices: np.ndarray  # into the scheme's column list
    bias: float
    coefficients: np.ndarray  # aligned with column_indices
    constrained_mask: np.ndarray  # True where the coefficient must be >= 0

    def __post_init__(self):
        if not (
            len(self.column_indices) == len(self.coefficients) == len(self.constrained_mask)
        ):
            raise ModelFormatError(f"subscale {self.name!r}: misaligned arrays")
        if np.any(self.coefficients[self.constrained_mask] < 0):
            raise ModelFormatError(f"subscale {self.name!r}: constrained coefficient below zero")

    def raw_score(self, row_bits: np.ndarray) -> float:
        active = row_bits[self.column_indices].astype(np.float64)
        return self.bias + float(self.coefficients @ active)

    def raw_scores(self, bits: np.ndarray) -> np.ndarray:
        design = bits[:, self.column_indices].astype(np.float64)
        return self.bias + design @ self.coefficients


@dataclass(frozen=True)
class TwoLayerModel:
    scheme: BinarizationScheme
    subscales: tuple[SubscaleModel, ...]
    alpha: np.ndarray  # one non-negative weight per subscale
    bias: float

    def __post_init__(self):
        if len(self.alpha) != len(self.subscales):
            raise ModelFormatError("one alpha per subscale required")
        if np.any(self.alpha < 0):
            raise ModelFormatError("second-layer weights must be non-negative")
        owned: list[str] = []
        for sub in self.subscales:
            for i in sub.column_indices:
                feat = self.scheme.columns[int(i)].feature
                if feat not in owned:
                    owned.append(feat)
        all_features = [f.name for f in self.scheme.schema.features]
        if sorted(owned) != sorted(all_features):
            raise ModelFormatError("subscales must partition the feature set")

    @property
    def schema(self) -> Schema:
        return self.scheme.schema

    def subscale(self, name: str) -> SubscaleModel:
        for sub in self.subscales:
            if sub.name == name:
                return sub
        raise KeyError(name)

    def coefficient_vector(self) -> np.ndarray:
        """Coefficients spread over the full scheme column space."""
        beta = np.zeros(self.scheme.n_columns, dtype=np.float64)
        for sub in self.subscales:
            beta[sub.column_indices] = sub.coefficients
        return beta

    def score_table(self, feature: str) -> ScoreTable:
        return to_two_sided(self.scheme, feature, self.coefficient_vector())


@dataclass(frozen=True)
class ActiveTerm:
    column_index: int
    condition: str
    points: float


@dataclass(frozen=True)
class SubscaleBreakdown:
    name: str
    raw_score: float
    probability: float
    weight: float
    contribution: float  # weight * probability
    active_terms: tuple[ActiveTerm, ...]


@dataclass(frozen=True)
class PredictionBreakdown:
    """Full per-term account of one prediction."""

    subscales: tuple[SubscaleBreakdown, ...]
    bias: float
    final_score: float
    final_probability: float
    encoded_bits: tuple[int, ...]

    def recomputed_score(self) -> float:
        total = self.bias
        for sub in self.subscales:
            total += sub.contribution
        return total


def predict_bits(model: TwoLayerModel, row_bits: np.ndarray) -> PredictionBreakdown:
    """Breakdown for an already-encoded binary row."""
    subs = []
    final = model.bias
    for sub, a in zip(model.subscales, model.alpha):
        raw = sub.raw_score(row_bits)
        prob = sigmoid(raw)
        contribution = float(a) * prob
        final += contribution
        terms = tuple(
            ActiveTerm(
                column_index=int(i),
                condition=model.scheme.columns[int(i)].describe(),
                points=float(c),
            )
            for i, c in zip(sub.column_indices, sub.coefficients)
            if row_bits[int(i)]
        )
        subs.append(
            SubscaleBreakdown(
                name=sub.name,
                raw_score=raw,
                probability=prob,
                weight=float(a),
                contribution=contribution,
                active_terms=terms,
            )
        )
    return PredictionBreakdown(
        subscales=tuple(subs),
        bias=model.bias,
        final_score=final,
        final_probability=sigmoid(final),
        encoded_bits=tuple(int(b) for b in row_bits),
    )


def predict(model: TwoLayerModel, x: Mapping[str, object]) -> PredictionBreakdown:
    """Encode one observation and break down its prediction."""
    return predict_bits(model, encode(x, model.scheme))


def predict_matrix(model: TwoLayerModel, bits: np.ndarray) -> np.ndarray:
    """Final probabilities for a whole encoded matrix (vectorized)."""
    probs = subscale_probabilities(model, bits)
    return training._sigmoid(model.bias + probs @ model.alpha)


def subscale_probabilities(model: TwoLayerModel, bits: np.ndarray) -> np.ndarray:
    """N x K matrix of first-layer probabilities."""
    cols = [training._sigmoid(sub.raw_scores(bits)) for sub in model.subscales]
    return np.column_stack(cols) if cols else np.zeros((bits.shape[0], 0))


def train_subscale(
    scheme: BinarizationScheme,
    matrix: BinaryMatrix,
    labels: np.ndarray,
    weights: np.ndarray,
    tag: str,
    lam: float = training.DEFAULT_LAMBDA,
    max_iters: int = training.DEFAULT_MAX_ITERS,
    tol: float = training.DEFAULT_TOL,
) -> tuple[SubscaleModel, training.FitInfo]:
    """Fit one subscale as an independent constrained logistic regression."""
    col_idx = training.subscale_column_indices(scheme, tag)
    constrained = training.constrained_mask_for(scheme, col_idx)
    regularized = training.regularized_mask_for(scheme, col_idx)
    design = matrix.bits[:, col_idx].astype(np.float64)
    bias, beta, info = training.projected_gradient_fit(
        design, labels, weights, lam, regularized, constrained, max_iters, tol
    )
    model = SubscaleModel(
        name=tag,
        column_indices=col_idx,
        bias=bias,
        coefficients=beta,
        constrained_mask=constrained,
    )
    return model, info


def train_second_layer(
    subscale_probs: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    lam: float = training.DEFAULT_LAMBDA,
    max_iters: int = training.DEFAULT_MAX_ITERS,
    tol: float = training.DEFAULT_TOL,
) -> tuple[np.ndarray, float, training.FitInfo]:
    """Fit the non-negative combination of subscale probabilities."""
    k = subscale_probs.shape[1]
    if k < 1:
        raise DataError("second layer needs at least one subscale")
    mask = np.ones(k, dtype=bool)
    bias, alpha, info = training.projected_gradient_fit(
        subscale_probs, labels, weights, lam, mask, mask, max_iters, tol
    )
    return alpha, bias, info


def joint_objective(
    model: TwoLayerModel,
    bits: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    lam: float,
) -> float:
    n = len(labels)
    r = predict_matrix(model, bits)
    rc = np.clip(r, training.PROB_EPS, 1.0 - training.PROB_EPS)
    data = float(np.sum(weights * -(labels * np.log(rc) + (1 - labels) * np.log(1 - rc))) / n)
    reg = float(np.sum(model.alpha**2))
    for sub in model.subscales:
        reg_mask = training.regularized_mask_for(model.scheme, sub.column_indices)
        reg += float(np.sum(sub.coefficients[reg_mask] ** 2))
    return data + lam * reg


def fine_tune(
    model: TwoLayerModel,
    matrix: BinaryMatrix,
    labels: np.ndarray,
    weights: np.ndarray,
    lr: float = training.FINE_TUNE_LR,
    epochs: int = 0,
    lam: float = training.DEFAULT_LAMBDA,
) -> tuple[TwoLayerModel, list[float]]:
    """Joint full-gradient polish of both layers.

    Each epoch takes one small gradient step through the whole model and
    re-projects the sign-constrained parameters; steps that would worsen
    the joint objective are rejected, so the returned trace never
    increases.  With ``epochs=0`` the model is returned unchanged.
    """
    labels = np.asarray(labels, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bits = matrix.bits
    n = len(labels)
    current = _project(model)
    trace = [joint_objective(current, bits, labels, weights, lam)]
    for _ in range(epochs):
        probs = subscale_probabilities(current, bits)
        r = training._sigmoid(current.bias + probs @ current.alpha)
        g = weights * (r - labels) / n  # d(data term)/d(final score), per row
        grad_bias = float(np.sum(g))
        grad_alpha = probs.T @ g + 2.0 * lam * current.alpha
        new_subs = []
        for k, sub in enumerate(current.subscales):
            sk = g * current.alpha[k] * probs[:, k] * (1.0 - probs[:, k])
            design = bits[:, sub.column_indices].astype(np.float64)
            grad_beta = design.T @ sk
            reg_mask = training.regularized_mask_for(current.scheme, sub.column_indices)
            grad_beta[reg_mask] += 2.0 * lam * sub.coefficients[reg_mask]
            grad_bk = float(np.sum(sk))
            new_beta = sub.coefficients - lr * grad_beta
            new_beta[sub.constrained_mask] = np.maximum(new_beta[sub.constrained_mask], 0.0)
            new_subs.append(
                replace(sub, bias=sub.bias - lr * grad_bk, coefficients=new_beta)
            )
        new_alpha = np.maximum(current.alpha - lr * grad_alpha, 0.0)
        candidate = TwoLayerModel(
            scheme=current.scheme,
            subscales=tuple(new_subs),
            alpha=new_alpha,
            bias=current.bias - lr * grad_bias,
        )
        new_obj = joint_objective(candidate, bits, labels, weights, lam)
        if new_obj > trace[-1]:
            break  # a worsening step would repeat identically; stop here
        current = candidate
        trace.append(new_obj)
    return current, trace


def _project(model: TwoLayerModel) -> TwoLayerModel:
    """Clip sign-constrained parameters into the feasible set."""
    subs = []
    changed = False
    for sub in model.subscales:
        if np.any(sub.coefficients[sub.constrained_mask] < 0):
            beta = sub.coefficients.copy()
            beta[sub.constrained_mask] = np.maximum(beta[sub.constrained_mask], 0.0)
            subs.append(replace(sub, coefficients=beta))
            changed = True
        else:
            subs.append(sub)
    alpha = model.alpha
    if np.any(alpha < 0):
        alpha = np.maximum(alpha, 0.0)
        changed = True
    if not changed:
        return model
    return TwoLayerModel(scheme=model.scheme, subscales=tuple(subs), alpha=alpha, bias=model.bias)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _schema_doc(schema: Schema) -> dict:
    return {
        "label": schema.label_name,
        "positive_means": schema.positive_label_meaning,
        "subscales": list(schema.subscale_order),
        "features": [
            {
                "name": f.name,
                "kind": f.kind,
                "monotonicity": f.monotonicity,
                "subscale": f.subscale,
                "special_values": [
                    {"code": float(sv.code), "meaning": sv.meaning} for sv in f.special_values
                ],
            }
            for f in schema.features
        ],
    }


def _schema_from_doc(doc: dict) -> Schema:
    features = tuple(
        FeatureSpec(
            name=f["name"],
            kind=f["kind"],
            monotonicity=f.get("monotonicity", "none"),
            special_values=tuple(
                SpecialValue(code=float(sv["code"]), meaning=sv.get("meaning", ""))
                for sv in f.get("special_values", [])
            ),
            subscale=f.get("subscale", ""),
        )
        for f in doc["features"]
    )
    return Schema(
        features=features,
        label_name=doc["label"],
        positive_label_meaning=doc.get("positive_means", ""),
        subscale_order=tuple(doc.get("subscales", ())),
    )


def model_document(model: TwoLayerModel) -> dict:
    """Plain-data form of the model, floats at full precision."""
    scheme = model.scheme
    return {
        "model_version": MODEL_VERSION,
        "schema": _schema_doc(scheme.schema),
        "scheme": {
            "max_thresholds_per_feature": scheme.max_thresholds_per_feature,
            "thresholds": {k: [float(t) for t in v] for k, v in scheme.thresholds.items()},
            "category_tokens": {k: list(v) for k, v in scheme.category_tokens.items()},
        },
        "subscales": [
            {
                "name": sub.name,
                "bias": float(sub.bias),
                "columns": [int(i) for i in sub.column_indices],
                "coefficients": [float(c) for c in sub.coefficients],
            }
            for sub in model.subscales
        ],
        "alpha": [float(a) for a in model.alpha],
        "bias": float(model.bias),
    }


def model_from_document(doc: dict) -> TwoLayerModel:
    if not isinstance(doc, dict) or "model_version" not in doc:
        raise ModelFormatError("not a model file")
    if doc["model_version"] != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model_version {doc['model_version']!r} (expected {MODEL_VERSION})"
        )
    try:
        schema = _schema_from_doc(doc["schema"])
        thresholds = {k: tuple(float(t) for t in v) for k, v in doc["scheme"]["thresholds"].items()}
        tokens = {k: tuple(v) for k, v in doc["scheme"]["category_tokens"].items()}
        scheme = BinarizationScheme(
            schema=schema,
            columns=layout_columns(schema, thresholds, tokens),
            thresholds=thresholds,
            category_tokens=tokens,
            max_thresholds_per_feature=int(doc["scheme"]["max_thresholds_per_feature"]),
        )
        subscales = []
        for sd in doc["subscales"]:
            col_idx = np.asarray(sd["columns"], dtype=np.int64)
            subscales.append(
                SubscaleModel(
                    name=sd["name"],
                    column_indices=col_idx,
                    bias=float(sd["bias"]),
                    coefficients=np.asarray(sd["coefficients"], dtype=np.float64),
                    constrained_mask=training.constrained_mask_for(scheme, col_idx),
                )
            )
        return TwoLayerModel(
            scheme=scheme,
            subscales=tuple(subscales),
            alpha=np.asarray(doc["alpha"], dtype=np.float64),
            bias=float(doc["bias"]),
        )
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"corrupted model file: {exc}") from exc


def save_model(model: TwoLayerModel, path: str | Path) -> None:
    """Write the model as YAML; the round trip is lossless."""
    Path(path).write_text(
        yaml.safe_dump(model_document(model), sort_keys=False), encoding="utf-8"
    )


def load_model(path: str | Path) -> TwoLayerModel:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ModelFormatError(f"cannot parse model file {path}: {exc}") from exc
    return model_from_document(doc)


def model_fingerprint(model: TwoLayerModel) -> str:
    """Stable content hash of the full model document."""
    text = yaml.safe_dump(model_document(model), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainLog:
    subscale_fits: tuple[tuple[str, training.FitInfo], ...]
    second_layer_fit: training.FitInfo
    fine_tune_trace: tuple[float, ...]


def train_model(
    dataset: Dataset,
    max_thresholds: int = 5,
    lam: float = training.DEFAULT_LAMBDA,
    fine_tune_epochs: int = 0,
    max_iters: int = training.DEFAULT_MAX_ITERS,
    tol: float = training.DEFAULT_TOL,
    scheme: BinarizationScheme | None = None,
) -> tuple[TwoLayerModel, TrainLog]:
    """Full pipeline: binarize, fit each subscale, fit the combiner,
    then optionally fine-tune jointly."""
    from .binarize import build_scheme, encode_dataset

    neg, pos = dataset.class_counts()
    if neg == 0 or pos == 0:
        raise DataError("training requires both classes present")
    if scheme is None:
        scheme = build_scheme(dataset, max_thresholds)
    matrix = encode_dataset(dataset, scheme)
    labels = dataset.labels.astype(np.float64)
    weights = dataset.weights

    subs = []
    fits = []
    for tag in dataset.schema.subscale_order:
        sub, info = train_subscale(scheme, matrix, labels, weights, tag, lam, max_iters, tol)
        subs.append(sub)
        fits.append((tag, info))

    stub = TwoLayerModel(
        scheme=scheme,
        subscales=tuple(subs),
        alpha=np.zeros(len(subs)),
        bias=0.0,
    )
    probs = subscale_probabilities(stub, matrix.bits)
    alpha, bias, second_info = train_second_layer(probs, labels, weights, lam, max_iters, tol)
    model = TwoLayerModel(scheme=scheme, subscales=tuple(subs), alpha=alpha, bias=bias)

    trace: list[float] = []
    if fine_tune_epochs > 0:
        model, trace = fine_tune(model, matrix, labels, weights, epochs=fine_tune_epochs, lam=lam)
    return model, TrainLog(
        subscale_fits=tuple(fits),
        second_layer_fit=second_info,
        fine_tune_trace=tuple(trace),
    )
