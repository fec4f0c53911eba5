import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
FIXTURES = DATA / "fixtures"
GOLDEN = FIXTURES / "golden"

from creditlens import synthetic
from creditlens.binarize import build_scheme, encode_dataset
from creditlens.data import Dataset, FeatureSpec, Schema, SpecialValue, apply_class_weights
from creditlens.riskmodel import load_model, train_model
from creditlens.rules import build_context


def pytest_runtest_makereport(item, call):
    # acceptance criteria print one PASS/FAIL/SKIP line each
    if call.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    if call.excinfo is None:
        status = "PASS"
    elif call.excinfo.errisinstance(BaseException) and call.excinfo.typename == "Skipped":
        status = "SKIP"
    else:
        status = "FAIL"
    print(f"\nACCEPTANCE {status}: {item.name}", flush=True)


@pytest.fixture(scope="session")
def german_like() -> Dataset:
    return synthetic.generate_german_like()


@pytest.fixture(scope="session")
def german_weighted(german_like) -> Dataset:
    return apply_class_weights(german_like, 5.0, 1.0)


@pytest.fixture(scope="session")
def german_model(german_weighted):
    model, log = train_model(german_weighted, fine_tune_epochs=20)
    return model


@pytest.fixture(scope="session")
def demo_dataset() -> Dataset:
    return synthetic.generate_heloc_like()


@pytest.fixture(scope="session")
def demo_model():
    return load_model(DATA / "demo_model.yaml")


@pytest.fixture(scope="session")
def demo_context(demo_model, demo_dataset):
    return build_context(demo_model, demo_dataset)


@pytest.fixture()
def tiny_schema() -> Schema:
    return Schema(
        features=(
            FeatureSpec(
                name="score",
                kind="numeric",
                monotonicity="decreasing",
                special_values=(SpecialValue(-9.0, "missing"),),
                subscale="main",
            ),
            FeatureSpec(name="usage", kind="numeric", monotonicity="increasing", subscale="main"),
            FeatureSpec(name="housing", kind="categorical", subscale="other"),
        ),
        label_name="label",
        positive_label_meaning="bad",
    )


@pytest.fixture()
def tiny_dataset(tiny_schema) -> Dataset:
    rng = np.random.default_rng(3)
    n = 80
    score = np.round(rng.uniform(0, 100, n))
    score[rng.random(n) < 0.1] = -9.0
    usage = np.round(rng.uniform(0, 10, n))
    housing = np.asarray(
        [("rent", "own", "free")[i] for i in rng.integers(0, 3, n)], dtype=object
    )
    logits = -0.04 * np.where(score >= 0, score, 50) + 0.3 * usage
    labels = (rng.random(n) < 1 / (1 + np.exp(-(logits - np.median(logits))))).astype(np.int8)
    if labels.min() == labels.max():
        labels[:3] = 1 - labels[0]
    return Dataset(
        schema=tiny_schema,
        columns=(score, usage, housing),
        labels=labels,
        weights=np.ones(n),
    )
