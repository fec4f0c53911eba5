import numpy as np
import pytest

from creditlens.binarize import build_scheme
from creditlens.data import apply_class_weights, stratified_folds
from creditlens.evaluation import (
    METRICS,
    MetricError,
    ModelConfig,
    auc,
    average_precision,
    evaluate,
    recall_at_half,
)
from creditlens.riskmodel import model_document, train_model


def pairwise_auc(scores, labels):
    """O(N^2) comparison oracle; ties count one half."""
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    total = 0.0
    for i in pos:
        for j in neg:
            if scores[i] > scores[j]:
                total += 1.0
            elif scores[i] == scores[j]:
                total += 0.5
    return total / (len(pos) * len(neg))


def naive_average_precision(scores, labels):
    order = np.argsort(-np.asarray(scores), kind="stable")
    y = np.asarray(labels)[order]
    precisions = []
    hits = 0
    for k, yk in enumerate(y, start=1):
        if yk == 1:
            hits += 1
            precisions.append(hits / k)
    return float(np.mean(precisions))


class TestAuc:
    def test_perfect_separation(self):
        assert auc(np.array([0.9, 0.8, 0.2, 0.1]), np.array([1, 1, 0, 0])) == 1.0

    def test_all_ties(self):
        assert auc(np.ones(10), np.array([1, 0] * 5)) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(MetricError):
            auc(np.array([0.1, 0.2]), np.array([1, 1]))

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(5, 60))
            scores = np.round(rng.random(n), 2)  # induce ties
            labels = (rng.random(n) < 0.5).astype(int)
            if labels.min() == labels.max():
                continue
            assert auc(scores, labels) == pytest.approx(
                pairwise_auc(scores, labels), abs=1e-12
            )

    def test_invariant_under_monotone_transforms(self):
        rng = np.random.default_rng(2)
        scores = rng.random(200)
        labels = (rng.random(200) < 0.4).astype(int)
        base = auc(scores, labels)
        assert auc(1 / (1 + np.exp(-scores)), labels) == pytest.approx(base, abs=1e-12)
        assert auc(3.5 * scores + 11.0, labels) == pytest.approx(base, abs=1e-12)


class TestAveragePrecision:
    def test_perfect_ranking(self):
        assert average_precision(np.array([0.9, 0.8, 0.2]), np.array([1, 1, 0])) == 1.0

    def test_single_positive_ranked_last(self):
        n = 7
        scores = np.linspace(1.0, 0.1, n)
        labels = np.zeros(n, dtype=int)
        labels[-1] = 1
        assert average_precision(scores, labels) == pytest.approx(1 / n, abs=1e-12)

    def test_matches_naive_recomputation(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(4, 80))
            scores = np.round(rng.random(n), 2)
            labels = (rng.random(n) < 0.4).astype(int)
            if labels.sum() == 0:
                continue
            assert average_precision(scores, labels) == pytest.approx(
                naive_average_precision(scores, labels), abs=1e-12
            )

    def test_no_positives_rejected(self):
        with pytest.raises(MetricError):
            average_precision(np.array([0.1]), np.array([0]))


class TestRecall:
    def test_recall_at_half(self):
        scores = np.array([0.9, 0.6, 0.4, 0.2])
        labels = np.array([1, 0, 1, 1])
        assert recall_at_half(scores, labels) == pytest.approx(1 / 3)


@pytest.fixture(scope="module")
def report(german_like):
    folds = stratified_folds(german_like, 5, seed=7)
    config = ModelConfig(weight_pos=5.0, fine_tune_epochs=10)
    return evaluate(german_like, folds, config)


class TestEvaluate:

    def test_metrics_in_unit_interval(self, report):
        for m in METRICS:
            assert 0.0 <= report.mean(m) <= 1.0
            assert len(report.per_fold[m]) == 5

    def test_learnable_signal_recovered(self, report):
        assert report.mean("auc") > 0.70

    def test_means_recompute_from_folds(self, report):
        for m in METRICS:
            assert report.mean(m) == pytest.approx(float(np.mean(report.per_fold[m])))
            assert report.std(m) == pytest.approx(
                float(np.std(report.per_fold[m], ddof=1))
            )

    def test_deterministic(self, german_like):
        folds = stratified_folds(german_like, 3, seed=9)
        config = ModelConfig(weight_pos=5.0, fine_tune_epochs=5)
        a = evaluate(german_like, folds, config)
        b = evaluate(german_like, folds, config)
        assert a.per_fold == b.per_fold

    def test_permuted_labels_score_near_chance(self, german_like):
        import dataclasses

        rng = np.random.default_rng(17)
        permuted = dataclasses.replace(
            german_like, labels=rng.permutation(german_like.labels)
        )
        folds = stratified_folds(permuted, 5, seed=3)
        report = evaluate(permuted, folds, ModelConfig(fine_tune_epochs=0))
        assert 0.45 <= report.mean("auc") <= 0.55

    def test_no_leakage_held_out_rows_cannot_move_thresholds(self, german_like):
        import dataclasses

        folds = stratified_folds(german_like, 5, seed=7)
        train_idx = folds.train_indices(0)
        poisoned_cols = []
        for spec, col in zip(german_like.schema.features, german_like.columns):
            col = col.copy()
            held = folds.fold_indices(0)
            if spec.kind == "numeric":
                col[held] = 9999.0
            else:
                col[held] = "poisoned"
            poisoned_cols.append(col)
        poisoned = dataclasses.replace(german_like, columns=tuple(poisoned_cols))

        clean_train = apply_class_weights(german_like.subset(train_idx), 5.0, 1.0)
        poisoned_train = apply_class_weights(poisoned.subset(train_idx), 5.0, 1.0)
        a = build_scheme(clean_train)
        b = build_scheme(poisoned_train)
        assert a.thresholds == b.thresholds
        ma, _ = train_model(clean_train, fine_tune_epochs=3)
        mb, _ = train_model(poisoned_train, fine_tune_epochs=3)
        assert model_document(ma) == model_document(mb)

    def test_fixed_scheme_flag(self, german_like):
        folds = stratified_folds(german_like, 3, seed=1)
        report = evaluate(
            german_like, folds, ModelConfig(fine_tune_epochs=0, fixed_scheme=True)
        )
        assert report.mean("auc") > 0.65

    def test_table_format(self, report):
        table = report.table()
        lines = table.splitlines()
        assert lines[0].startswith("metric,mean,std,fold0")
        assert len(lines) == 1 + len(METRICS)
