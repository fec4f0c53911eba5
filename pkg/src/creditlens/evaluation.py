"""Cross-validated evaluation: accuracy, AUC, average precision, and
recall at the 0.5 probability threshold."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .binarize import build_scheme, encode_dataset
from .data import Dataset, FoldAssignment, apply_class_weights
from .riskmodel import predict_matrix, train_model


class MetricError(ValueError):
    """Raised when a metric is undefined for the given labels."""


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-based area under the ROC curve; ties contribute one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    pos_rank_sum = float(np.sum(ranks[labels == 1]))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Non-interpolated average precision.

    Rows are visited in descending score order; ties keep ascending
    original index (stable sort), which pins the value exactly.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0:
        raise MetricError("average precision needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    hits = 0
    total = 0.0
    for k, idx in enumerate(order, start=1):
        if labels[idx] == 1:
            hits += 1
            total += hits / k
    return total / n_pos


def accuracy(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    preds = np.asarray(scores) >= threshold
    return float(np.mean(preds == (np.asarray(labels) == 1)))


def recall_at_half(scores: np.ndarray, labels: np.ndarray) -> float:
    """Recall of the positive class at the 0.5 probability cutoff."""
    labels = np.asarray(labels)
    pos = labels == 1
    if not np.any(pos):
        raise MetricError("recall needs at least one positive")
    preds = np.asarray(scores) >= 0.5
    return float(np.sum(preds & pos) / np.sum(pos))


METRICS = ("accuracy", "auc", "average_precision", "recall_at_half")


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters for one training run."""

    max_thresholds: int = 5
    lam: float = 1e-3
    fine_tune_epochs: int = 50
    weight_pos: float = 1.0
    weight_neg: float = 1.0
    fixed_scheme: bool = False  # reuse thresholds learned on the full data

    def fingerprint(self) -> str:
        return hashlib.sha256(repr(self).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class MetricReport:
    k: int
    seed: int
    config_fingerprint: str
    per_fold: dict[str, tuple[float, ...]]

    def mean(self, metric: str) -> float:
        return float(np.mean(self.per_fold[metric]))

    def std(self, metric: str) -> float:
        values = self.per_fold[metric]
        return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0

    def summary(self) -> dict[str, tuple[float, float]]:
        return {m: (self.mean(m), self.std(m)) for m in METRICS}

    def table(self) -> str:
        lines = ["metric,mean,std," + ",".join(f"fold{i}" for i in range(self.k))]
        for m in METRICS:
            vals = ",".join(f"{v:.6f}" for v in self.per_fold[m])
            lines.append(f"{m},{self.mean(m):.6f},{self.std(m):.6f},{vals}")
        return "\n".join(lines)


def evaluate(
    dataset: Dataset,
    folds: FoldAssignment,
    config: ModelConfig,
) -> MetricReport:
    """Train on k-1 folds and score the held-out fold, for every fold.

    Binarization thresholds are re-learned on each fold's training rows
    (no leakage) unless the config pins a fixed scheme.  Class weights
    apply to the training loss only; held-out metrics are unweighted.
    Deterministic given the fold assignment and config.
    """
    shared_scheme = None
    if config.fixed_scheme:
        weighted_full = apply_class_weights(dataset, config.weight_pos, config.weight_neg)
        shared_scheme = build_scheme(weighted_full, config.max_thresholds)

    per_fold: dict[str, list[float]] = {m: [] for m in METRICS}
    for fold in range(folds.k):
        train = dataset.subset(folds.train_indices(fold))
        test = dataset.subset(folds.fold_indices(fold))
        train = apply_class_weights(train, config.weight_pos, config.weight_neg)
        try:
            model, _ = train_model(
                train,
                max_thresholds=config.max_thresholds,
                lam=config.lam,
                fine_tune_epochs=config.fine_tune_epochs,
                scheme=shared_scheme,
            )
        except Exception as exc:
            raise RuntimeError(f"training failed on fold {fold}: {exc}") from exc
        bits = encode_dataset(test, model.scheme).bits
        scores = predict_matrix(model, bits)
        per_fold["accuracy"].append(accuracy(scores, test.labels))
        per_fold["auc"].append(auc(scores, test.labels))
        per_fold["average_precision"].append(average_precision(scores, test.labels))
        per_fold["recall_at_half"].append(recall_at_half(scores, test.labels))
    return MetricReport(
        k=folds.k,
        seed=folds.seed,
        config_fingerprint=config.fingerprint(),
        per_fold={m: tuple(v) for m, v in per_fold.items()},
    )
