"""Acceptance criteria, one test per criterion, at pinned tolerances.

Reproduction checks against the two public datasets run only when the
corresponding files are present (see tools/prepare_german_credit.py and
tools/prepare_heloc.py); everything else runs unconditionally.
"""

import itertools
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from creditlens import synthetic, training
from creditlens.binarize import build_scheme, encode, encode_dataset, one_sided_score
from creditlens.data import apply_class_weights, load_dataset, load_schema, stratified_folds
from creditlens.evaluation import ModelConfig, auc, average_precision, evaluate
from creditlens.riskmodel import (
    fine_tune,
    model_document,
    predict_bits,
    save_model,
    train_model,
)
from creditlens.rules import (
    InfeasibleRuleError,
    OutlierError,
    Rule,
    RuleCache,
    build_context,
    make_query,
    max_support_rule,
    min_sparsity_rule,
    opt_consistent_rule,
    rule_support,
    verify_consistency,
)
from tests.conftest import DATA, GOLDEN
from tests.test_evaluation import naive_average_precision, pairwise_auc
from tests.test_rules import brute_max_support, brute_min_sparsity, make_ctx


def test_german_credit_reproduction():
    """10-fold stratified CV on the real German credit data: mean AUC
    within 0.03 of 0.807 and recall@0.5 within 0.06 of 0.866, in under
    three minutes."""
    path = Path(os.environ.get("GERMAN_CREDIT_PATH", DATA / "german_credit.csv"))
    if not path.exists():
        pytest.skip(
            "real German credit data not present (unavailable in this build "
            "environment; run tools/prepare_german_credit.py on the public "
            "german.data file to enable this check)"
        )
    schema = load_schema(DATA / "german_schema.yaml")
    dataset = load_dataset(path, schema)
    assert dataset.n_rows == 1000
    start = time.monotonic()
    folds = stratified_folds(dataset, 10, seed=7)
    report = evaluate(dataset, folds, ModelConfig(weight_pos=5.0))
    elapsed = time.monotonic() - start
    assert abs(report.mean("auc") - 0.807) <= 0.03, report.summary()
    assert abs(report.mean("recall_at_half") - 0.866) <= 0.06, report.summary()
    assert elapsed < 180.0


def test_fico_reproduction_conditional():
    """10-fold CV on the gated HELOC data with the 10-subscale schema:
    accuracy/AUC/average precision within 0.02 of 0.738/0.806/0.799."""
    path = Path(os.environ.get("HELOC_PATH", DATA / "heloc.csv"))
    if not path.exists():
        pytest.skip(
            "gated HELOC data not supplied (run tools/prepare_heloc.py on "
            "the challenge file to enable this check)"
        )
    schema = load_schema(DATA / "demo_schema.yaml")
    dataset = load_dataset(path, schema)
    folds = stratified_folds(dataset, 10, seed=7)
    report = evaluate(dataset, folds, ModelConfig())
    assert abs(report.mean("accuracy") - 0.738) <= 0.02, report.summary()
    assert abs(report.mean("auc") - 0.806) <= 0.02, report.summary()
    assert abs(report.mean("average_precision") - 0.799) <= 0.02, report.summary()


def test_solver_exactness():
    """200 randomized instances (at most 14 relevant columns, 200 rows):
    both solvers match exhaustive enumeration, each solve under 1s."""
    rng = np.random.default_rng(2024)
    solved = 0
    while solved < 200:
        n = int(rng.integers(5, 201))
        p = int(rng.integers(2, 8))  # 2p extended columns, p <= 7
        bits = (rng.random((n, p)) < rng.uniform(0.2, 0.8)).astype(np.uint8)
        preds = (rng.random(n) < 0.5).astype(np.int8)
        ctx = make_ctx(bits, preds)
        e = int(rng.integers(0, n))
        expected_min = brute_min_sparsity(ctx, e)
        t0 = time.monotonic()
        try:
            rule, report = min_sparsity_rule(e, ctx)
            got_min = rule.sparsity
        except InfeasibleRuleError:
            got_min = None
        assert time.monotonic() - t0 < 1.0
        assert got_min == expected_min
        if expected_min is None:
            continue
        cap = expected_min + int(rng.integers(0, 3))
        expected_max = brute_max_support(ctx, e, cap)
        t0 = time.monotonic()
        best, report = max_support_rule(e, ctx, cap)
        assert time.monotonic() - t0 < 1.0
        assert report.status == "optimal"
        scale = ctx.n_extended + 1
        assert best.support * scale - best.sparsity == expected_max
        solved += 1


def test_consistency_soundness(demo_context):
    """Every rule produced by any path re-verifies with zero violations
    against the exhaustive scan."""
    produced: list[tuple[Rule, object]] = []

    rng = np.random.default_rng(77)
    for _ in range(100):
        n = int(rng.integers(5, 120))
        p = int(rng.integers(2, 7))
        bits = (rng.random((n, p)) < 0.5).astype(np.uint8)
        preds = (rng.random(n) < 0.5).astype(np.int8)
        ctx = make_ctx(bits, preds)
        e = int(rng.integers(0, n))
        try:
            rule, _ = min_sparsity_rule(e, ctx)
            produced.append((rule, ctx))
            best, _ = max_support_rule(e, ctx, rule.sparsity + 1)
            produced.append((best, ctx))
        except InfeasibleRuleError:
            continue

    cache = RuleCache.open(DATA / "demo_cache.jsonl", demo_context)
    for rules in cache.records.values():
        for rule in rules:
            produced.append((rule, demo_context))

    for i in rng.integers(0, demo_context.n_rows, 40):
        try:
            rule = opt_consistent_rule(int(i), demo_context)
            produced.append((rule, demo_context))
        except (OutlierError, InfeasibleRuleError):
            continue

    for name in ("demo1_explain.json", "observation6_explain.json"):
        doc = json.loads((GOLDEN / name).read_text())
        if doc["rule"] is not None:
            preds = [p for p in doc["rule"]["predicates"]]
            assert doc["rule"]["support"] >= 1
    assert len(produced) > 200
    for rule, ctx in produced:
        result = verify_consistency(rule, ctx)
        assert result.consistent, (rule, result.violations[:5])
        assert rule.support == rule_support(rule.columns, ctx)


def test_explanation_latency_and_sparsity(demo_context):
    """Fresh explanations on the ~10K x ~170-column portfolio: each under
    7 seconds wall time, mean sparsity at most 4 predicates."""
    assert demo_context.n_rows == synthetic.DEFAULT_HELOC_ROWS
    assert 120 <= demo_context.n_original <= 200
    rng = np.random.default_rng(55)
    sparsities = []
    for i in rng.integers(0, demo_context.n_rows, 30):
        t0 = time.monotonic()
        try:
            rule = opt_consistent_rule(int(i), demo_context)
            sparsities.append(rule.sparsity)
        except (OutlierError, InfeasibleRuleError):
            pass
        assert time.monotonic() - t0 < 7.0
    assert len(sparsities) >= 20
    assert float(np.mean(sparsities)) <= 4.0


def _interval_representatives(model, feature):
    ts = list(model.scheme.thresholds.get(feature, ()))
    if not ts:
        return [0.0]
    reps = [ts[0] - 1.0]
    reps += [(a + b) / 2.0 for a, b in zip(ts, ts[1:])]
    reps.append(ts[-1] + 1.0)
    return reps


def test_representation_equivalence(german_model, demo_model):
    """Per-feature score tables equal the direct one-sided weighted sum,
    bit for bit, across every interval representative and sentinel."""
    for model in (german_model, demo_model):
        beta = model.coefficient_vector()
        for spec in model.schema.features:
            if spec.kind != "numeric":
                continue
            table = model.score_table(spec.name)
            cols = model.scheme.feature_columns(spec.name)
            grid = _interval_representatives(model, spec.name)
            grid += [t for t in model.scheme.thresholds.get(spec.name, ())]
            grid += list(spec.special_codes)
            for x in grid:
                assert table.value_at(x) == one_sided_score(x, spec, cols, beta), (
                    spec.name, x,
                )


def _sweep_probabilities(model, base_row, feature):
    reps = _interval_representatives(model, feature)
    probs = []
    for value in reps:
        x = dict(base_row)
        x[feature] = value
        probs.append(predict_bits(model, encode(x, model.scheme)).final_probability)
    return probs


def test_monotonicity_suite(german_model, german_like, demo_model, demo_dataset):
    """Sweeping any monotone feature across its intervals moves the final
    probability only in the declared direction: zero violations over 50
    random base points per feature in both schemas."""
    rng = np.random.default_rng(99)
    for model, dataset in ((german_model, german_like), (demo_model, demo_dataset)):
        base_indices = rng.integers(0, dataset.n_rows, 50)
        for spec in model.schema.features:
            if not spec.is_monotone():
                continue
            for i in base_indices:
                probs = _sweep_probabilities(model, dataset.row(int(i)), spec.name)
                pairs = zip(probs, probs[1:])
                if spec.monotonicity == "decreasing":
                    assert all(b <= a + 1e-12 for a, b in pairs), (spec.name, int(i), probs)
                else:
                    assert all(b >= a - 1e-12 for a, b in pairs), (spec.name, int(i), probs)


def test_optimization_correctness(german_weighted):
    """Analytic gradients match central finite differences to 1e-5;
    KKT conditions hold at convergence to 1e-5 for every constrained
    coefficient; the fine-tune objective trace never increases."""
    rng = np.random.default_rng(123)
    h = 1e-6
    for _ in range(20):
        n, d = int(rng.integers(5, 40)), int(rng.integers(1, 7))
        design = rng.random((n, d))
        labels = (rng.random(n) < 0.5).astype(float)
        weights = rng.uniform(0.5, 4.0, n)
        lam = float(rng.uniform(0, 0.05))
        reg = rng.random(d) < 0.5
        bias = float(rng.normal())
        beta = rng.normal(size=d)

        def f(b, bb):
            return training.loss_and_gradient(b, bb, design, labels, weights, lam, reg)[0]

        _, gb, gB = training.loss_and_gradient(bias, beta, design, labels, weights, lam, reg)
        assert abs(gb - (f(bias + h, beta) - f(bias - h, beta)) / (2 * h)) < 1e-5
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            num = (f(bias, beta + e) - f(bias, beta - e)) / (2 * h)
            assert abs(gB[j] - num) < 1e-5

    model, _ = train_model(german_weighted, fine_tune_epochs=0)
    matrix = encode_dataset(german_weighted, model.scheme)
    labels = german_weighted.labels.astype(float)
    for sub in model.subscales:
        design = matrix.bits[:, sub.column_indices].astype(float)
        reg = training.regularized_mask_for(model.scheme, sub.column_indices)
        _, _, grad = training.loss_and_gradient(
            sub.bias, sub.coefficients, design, labels, german_weighted.weights, 1e-3, reg
        )
        for j in np.flatnonzero(sub.constrained_mask):
            if sub.coefficients[j] > 0:
                assert abs(grad[j]) < 1e-5
            else:
                assert grad[j] >= -1e-5

    _, trace = fine_tune(model, matrix, labels, german_weighted.weights, epochs=100)
    assert all(a >= b for a, b in zip(trace, trace[1:]))


def test_metric_oracles():
    """AUC equals the O(N^2) pairwise oracle and average precision equals
    its naive recomputation, to 1e-12, on 50 random instances each."""
    rng = np.random.default_rng(321)
    checked_auc = checked_ap = 0
    while checked_auc < 50 or checked_ap < 50:
        n = int(rng.integers(4, 80))
        scores = np.round(rng.random(n), 2)
        labels = (rng.random(n) < 0.5).astype(int)
        if checked_auc < 50 and 0 < labels.sum() < n:
            assert auc(scores, labels) == pytest.approx(
                pairwise_auc(scores, labels), abs=1e-12
            )
            checked_auc += 1
        if checked_ap < 50 and labels.sum() > 0:
            assert average_precision(scores, labels) == pytest.approx(
                naive_average_precision(scores, labels), abs=1e-12
            )
            checked_ap += 1


def test_determinism(tmp_path, german_weighted):
    """Identical inputs and config give byte-identical model files and
    identical explanation outputs."""
    a_path, b_path = tmp_path / "a.yaml", tmp_path / "b.yaml"
    model_a, _ = train_model(german_weighted, fine_tune_epochs=10)
    model_b, _ = train_model(german_weighted, fine_tune_epochs=10)
    save_model(model_a, a_path)
    save_model(model_b, b_path)
    assert a_path.read_bytes() == b_path.read_bytes()

    ctx_a = build_context(model_a, german_weighted)
    ctx_b = build_context(model_b, german_weighted)
    assert ctx_a.fingerprint == ctx_b.fingerprint
    rng = np.random.default_rng(5)
    for i in rng.integers(0, german_weighted.n_rows, 10):
        try:
            ra = opt_consistent_rule(int(i), ctx_a)
            rb = opt_consistent_rule(int(i), ctx_b)
            assert (ra.columns, ra.label, ra.support) == (rb.columns, rb.label, rb.support)
        except OutlierError:
            with pytest.raises(OutlierError):
                opt_consistent_rule(int(i), ctx_b)
