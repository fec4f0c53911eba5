import math

import numpy as np
import pytest

from creditlens import training
from creditlens.data import (
    DataError,
    Dataset,
    FeatureSpec,
    Schema,
    SchemaError,
    SpecialValue,
    apply_class_weights,
    dataset_from_arrays,
    load_dataset,
    load_schema,
    save_dataset,
    save_schema,
    stratified_folds,
)

MINIMAL_SCHEMA = """
schema_version: 1
label: outcome
positive_means: bad
features:
  - {name: income, kind: numeric, monotonicity: none, subscale: money}
"""


def test_load_minimal_schema(tmp_path):
    p = tmp_path / "schema.yaml"
    p.write_text(MINIMAL_SCHEMA)
    schema = load_schema(p)
    assert schema.n_features == 1
    assert schema.label_name == "outcome"
    assert schema.subscale_order == ("money",)


def test_categorical_monotonicity_rejected(tmp_path):
    p = tmp_path / "schema.yaml"
    p.write_text(
        """
schema_version: 1
label: y
positive_means: bad
features:
  - {name: housing, kind: categorical, monotonicity: decreasing, subscale: s}
"""
    )
    with pytest.raises(SchemaError, match="housing"):
        load_schema(p)


def test_duplicate_feature_names_rejected():
    spec = FeatureSpec(name="a", kind="numeric", subscale="s")
    with pytest.raises(SchemaError, match="duplicate"):
        Schema(features=(spec, spec), label_name="y", positive_label_meaning="bad")


def test_unknown_subscale_tag_rejected():
    with pytest.raises(SchemaError, match="unknown subscale"):
        Schema(
            features=(FeatureSpec(name="a", kind="numeric", subscale="mystery"),),
            label_name="y",
            positive_label_meaning="bad",
            subscale_order=("known",),
        )


def test_schema_version_checked(tmp_path):
    p = tmp_path / "schema.yaml"
    p.write_text(MINIMAL_SCHEMA.replace("schema_version: 1", "schema_version: 99"))
    with pytest.raises(SchemaError, match="schema_version"):
        load_schema(p)


def test_schema_round_trip(tmp_path, tiny_schema):
    p = tmp_path / "schema.yaml"
    save_schema(tiny_schema, p)
    assert load_schema(p) == tiny_schema


def test_shipped_schemas_have_expected_shape():
    from tests.conftest import DATA

    demo = load_schema(DATA / "demo_schema.yaml")
    assert demo.n_features == 23
    assert len(demo.subscale_order) == 10
    for tag in demo.subscale_order:
        assert 1 <= len(demo.subscale_members(tag)) <= 4
    german = load_schema(DATA / "german_schema.yaml")
    assert german.n_features == 20
    assert german.subscale_order == ("credit_loan", "personal")
    monotone = [f.name for f in german.features if f.is_monotone()]
    assert monotone == ["checking_status", "savings_status"]


@pytest.fixture()
def csv_schema(tmp_path):
    p = tmp_path / "schema.yaml"
    p.write_text(
        """
schema_version: 1
label: y
positive_means: bad
features:
  - name: score
    kind: numeric
    monotonicity: decreasing
    subscale: s
    special_values:
      - {code: -9, meaning: no record}
  - {name: housing, kind: categorical, subscale: s}
"""
    )
    return load_schema(p)


def test_load_dataset_preserves_sentinels(tmp_path, csv_schema):
    f = tmp_path / "data.csv"
    f.write_text("score,housing,y\n10,rent,0\n-9,own,1\n20,rent,1\n")
    ds = load_dataset(f, csv_schema)
    assert ds.n_rows == 3
    assert ds.column("score")[1] == -9.0
    assert list(ds.labels) == [0, 1, 1]


def test_load_dataset_missing_column(tmp_path, csv_schema):
    f = tmp_path / "data.csv"
    f.write_text("score,y\n10,0\n")
    with pytest.raises(DataError, match="housing"):
        load_dataset(f, csv_schema)


def test_load_dataset_no_rows(tmp_path, csv_schema):
    f = tmp_path / "data.csv"
    f.write_text("score,housing,y\n")
    with pytest.raises(DataError, match="no rows"):
        load_dataset(f, csv_schema)


def test_load_dataset_bad_label(tmp_path, csv_schema):
    f = tmp_path / "data.csv"
    f.write_text("score,housing,y\n10,rent,2\n")
    with pytest.raises(DataError, match="label"):
        load_dataset(f, csv_schema)


def test_load_dataset_unparseable_cell(tmp_path, csv_schema):
    f = tmp_path / "data.csv"
    f.write_text("score,housing,y\nten,rent,0\n")
    with pytest.raises(DataError, match="score"):
        load_dataset(f, csv_schema)


def test_dataset_round_trip(tmp_path, german_like):
    f = tmp_path / "round.csv"
    save_dataset(german_like, f)
    back = load_dataset(f, german_like.schema)
    assert back.n_rows == german_like.n_rows
    assert np.array_equal(back.labels, german_like.labels)
    for spec in german_like.schema.features:
        a, b = german_like.column(spec.name), back.column(spec.name)
        if spec.kind == "numeric":
            assert np.array_equal(a.astype(float), b.astype(float)), spec.name
        else:
            assert list(map(str, a)) == list(map(str, b)), spec.name


class TestStratifiedFolds:
    def test_german_like_k10(self, german_like):
        folds = stratified_folds(german_like, 10, seed=7)
        n_pos = int(np.sum(german_like.labels == 1))
        for f in range(10):
            idx = folds.fold_indices(f)
            assert abs(len(idx) - german_like.n_rows / 10) <= 1
            pos = int(np.sum(german_like.labels[idx] == 1))
            assert abs(pos - n_pos / 10) <= 1

    def test_stratification_many_seeds(self, german_like):
        n_pos = int(np.sum(german_like.labels == 1))
        for seed in range(50):
            k = 2 + seed % 9  # covers 2..10
            folds = stratified_folds(german_like, k, seed)
            for f in range(k):
                pos = int(np.sum(german_like.labels[folds.fold_indices(f)] == 1))
                assert abs(pos - math.ceil(n_pos / k)) <= 1

    def test_deterministic(self, german_like):
        a = stratified_folds(german_like, 10, seed=3)
        b = stratified_folds(german_like, 10, seed=3)
        assert np.array_equal(a.assignment, b.assignment)
        c = stratified_folds(german_like, 10, seed=4)
        assert not np.array_equal(a.assignment, c.assignment)

    def test_k1_rejected(self, german_like):
        with pytest.raises(DataError):
            stratified_folds(german_like, 1, seed=0)

    def test_k_exceeding_minority_rejected(self, tiny_schema):
        ds = dataset_from_arrays(
            tiny_schema,
            [np.array([1.0, 2, 3, 4]), np.array([1.0, 1, 1, 1]),
             np.asarray(["rent"] * 4, dtype=object)],
            np.array([1, 0, 0, 0]),
        )
        with pytest.raises(DataError, match="minority"):
            stratified_folds(ds, 2, seed=0)

    def test_four_rows_two_folds(self, tiny_schema):
        ds = dataset_from_arrays(
            tiny_schema,
            [np.array([1.0, 2, 3, 4]), np.array([1.0, 1, 1, 1]),
             np.asarray(["rent"] * 4, dtype=object)],
            np.array([1, 1, 0, 0]),
        )
        folds = stratified_folds(ds, 2, seed=11)
        for f in (0, 1):
            labels = ds.labels[folds.fold_indices(f)]
            assert sorted(labels) == [0, 1]


class TestClassWeights:
    def test_identity(self, german_like):
        same = apply_class_weights(german_like, 1.0, 1.0)
        assert np.array_equal(same.weights, german_like.weights)

    def test_bad_class_weight_five(self, german_like):
        weighted = apply_class_weights(german_like, 5.0, 1.0)
        assert np.all(weighted.weights[german_like.labels == 1] == 5.0)
        assert np.all(weighted.weights[german_like.labels == 0] == 1.0)

    def test_nonpositive_rejected(self, german_like):
        with pytest.raises(DataError):
            apply_class_weights(german_like, 0.0, 1.0)

    def test_weighted_loss_equals_duplication(self):
        # integer weights behave exactly like row duplication in the
        # (unnormalized) data term of the loss
        rng = np.random.default_rng(5)
        design = rng.random((2, 3))
        labels = np.array([1.0, 0.0])
        beta = rng.normal(size=3)
        reg = np.zeros(3, dtype=bool)
        loss_w, gb_w, _ = training.loss_and_gradient(
            0.1, beta, design, labels, np.array([3.0, 1.0]), 0.0, reg
        )
        dup_design = np.vstack([design[0]] * 3 + [design[1]])
        dup_labels = np.array([1.0, 1.0, 1.0, 0.0])
        loss_d, gb_d, _ = training.loss_and_gradient(
            0.1, beta, dup_design, dup_labels, np.ones(4), 0.0, reg
        )
        assert loss_w * 2 == pytest.approx(loss_d * 4, rel=1e-12)
        assert gb_w * 2 == pytest.approx(gb_d * 4, rel=1e-12)
