"""Seeded synthetic data generators.

Two families ship with the package: a HELOC-style portfolio (23 numeric
bureau features, 10 subscales, sentinel codes -7/-8/-9) used for demos,
latency tests, and the shipped demo model; and a German-style retail
portfolio (20 mixed features, 2 subscales, 30% bad rate) used for
end-to-end pipeline tests when the real file is not on disk.

The HELOC-style generator plants one exactly-sized segment: 700 rows of
deep-subprime applicants that are the only rows with both a very low
external risk estimate and a very high revolving burden.  Ten
"exception" rows carry one of the two extremes each (with otherwise
excellent profiles), so neither extreme alone characterizes the segment.
Row 6 belongs to the segment and serves as the canonical rule-demo
observation.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, FeatureSpec, Schema, SpecialValue

#: Planted segment size in the HELOC-style portfolio.
PLANTED_SEGMENT_SIZE = 700
#: Default portfolio size; 700 rows are then 7.1% of the data.
DEFAULT_HELOC_ROWS = 9861
#: Canonical demo row inside the planted segment.
DEMO_RULE_ROW = 6

_NO_RECORD = SpecialValue(-9.0, "no bureau record or no investigation")
_NO_VALID = SpecialValue(-8.0, "no usable/valid trades or inquiries")
_NOT_MET = SpecialValue(-7.0, "condition not met")


def heloc_like_schema() -> Schema:
    """23 bureau features in 10 subscales, with declared risk directions."""

    def f(name, mono, subscale, specials=(_NO_RECORD,)):
        return FeatureSpec(
            name=name,
            kind="numeric",
            monotonicity=mono,
            special_values=tuple(specials),
            subscale=subscale,
        )

    features = (
        f("ExternalRiskEstimate", "decreasing", "external_risk"),
        f("MSinceOldestTradeOpen", "decreasing", "trade_open_time", (_NO_VALID, _NO_RECORD)),
        f("MSinceMostRecentTradeOpen", "decreasing", "trade_open_time"),
        f("AverageMInFile", "decreasing", "trade_open_time"),
        f("NumSatisfactoryTrades", "decreasing", "trade_frequency"),
        f("NumTotalTrades", "none", "trade_frequency"),
        f("NumTradesOpeninLast12M", "increasing", "trade_frequency"),
        f("PercentTradesNeverDelq", "decreasing", "delinquency"),
        f("MSinceMostRecentDelq", "decreasing", "delinquency", (_NOT_MET, _NO_VALID, _NO_RECORD)),
        f("MaxDelq2PublicRecLast12M", "decreasing", "delinquency"),
        f("MaxDelqEver", "decreasing", "delinquency"),
        f("NumTrades60Ever2DerogPubRec", "increasing", "derogatory"),
        f("NumTrades90Ever2DerogPubRec", "increasing", "derogatory"),
        f("PercentInstallTrades", "increasing", "installment"),
        f("NetFractionInstallBurden", "increasing", "installment", (_NO_VALID, _NO_RECORD)),
        f("NumInstallTradesWBalance", "none", "installment", (_NO_VALID, _NO_RECORD)),
        f("MSinceMostRecentInqexcl7days", "decreasing", "inquiries", (_NOT_MET, _NO_VALID, _NO_RECORD)),
        f("NumInqLast6M", "increasing", "inquiries"),
        f("NumInqLast6Mexcl7days", "increasing", "inquiries"),
        f("NetFractionRevolvingBurden", "increasing", "revolving_burden", (_NO_VALID, _NO_RECORD)),
        f("NumRevolvingTradesWBalance", "none", "revolving_burden", (_NO_VALID, _NO_RECORD)),
        f("NumBank2NatlTradesWHighUtilization", "increasing", "utilization", (_NO_VALID, _NO_RECORD)),
        f("PercentTradesWBalance", "none", "trade_balance"),
    )
    return Schema(
        features=features,
        label_name="RiskPerformance",
        positive_label_meaning="default / bad risk",
        subscale_order=(
            "external_risk",
            "trade_open_time",
            "trade_frequency",
            "delinquency",
            "derogatory",
            "installment",
            "inquiries",
            "revolving_burden",
            "utilization",
            "trade_balance",
        ),
    )


def _clip_round(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.clip(np.round(x), lo, hi).astype(np.float64)


def generate_heloc_like(
    n_rows: int = DEFAULT_HELOC_ROWS,
    seed: int = 20240613,
    planted: bool = True,
) -> Dataset:
    """Sample a HELOC-style portfolio; ~50% bad rate, deterministic."""
    schema = heloc_like_schema()
    rng = np.random.default_rng(seed)
    n = n_rows
    u = rng.normal(0.0, 1.0, n)  # latent creditworthiness (higher = worse)

    def noisy(center, slope, sd, lo, hi):
        return _clip_round(center + slope * u + rng.normal(0.0, sd, n), lo, hi)

    cols: dict[str, np.ndarray] = {}
    # The two rule-demo features carry no signal outside the planted
    # segment, so the learned cut that matters is the segment boundary.
    cols["ExternalRiskEstimate"] = _clip_round(rng.uniform(55, 94, n), 55, 94)
    cols["NetFractionRevolvingBurden"] = _clip_round(rng.uniform(0, 68, n), 0, 68)
    cols["MSinceOldestTradeOpen"] = noisy(180, -40, 30, 12, 500)
    cols["MSinceMostRecentTradeOpen"] = noisy(9, -2.5, 4, 0, 60)
    cols["AverageMInFile"] = noisy(75, -20, 10, 4, 240)
    cols["NumSatisfactoryTrades"] = noisy(20, -6, 3, 0, 65)
    cols["NumTotalTrades"] = noisy(21, -4, 5, 1, 85)
    cols["NumTradesOpeninLast12M"] = noisy(1.6, 1.2, 1.0, 0, 12)
    cols["PercentTradesNeverDelq"] = noisy(93, -7, 4, 20, 100)
    cols["MSinceMostRecentDelq"] = noisy(30, -12, 8, 0, 83)
    cols["MaxDelq2PublicRecLast12M"] = noisy(6.2, -1.4, 1.0, 0, 9)
    cols["MaxDelqEver"] = noisy(6.8, -1.4, 1.0, 1, 9)
    cols["NumTrades60Ever2DerogPubRec"] = noisy(0.5, 0.9, 0.6, 0, 12)
    cols["NumTrades90Ever2DerogPubRec"] = noisy(0.3, 0.7, 0.5, 0, 12)
    cols["PercentInstallTrades"] = noisy(33, 6, 8, 0, 100)
    cols["NetFractionInstallBurden"] = noisy(45, 12, 15, 0, 300)
    cols["NumInstallTradesWBalance"] = noisy(2.2, 0.8, 1.0, 0, 16)
    cols["MSinceMostRecentInqexcl7days"] = noisy(4, -2, 3, 0, 24)
    cols["NumInqLast6M"] = noisy(1.3, 1.1, 1.0, 0, 20)
    cols["NumInqLast6Mexcl7days"] = noisy(1.1, 1.0, 1.0, 0, 20)
    cols["NumRevolvingTradesWBalance"] = noisy(4, 1.5, 2.0, 0, 25)
    cols["NumBank2NatlTradesWHighUtilization"] = noisy(0.8, 1.2, 1.0, 0, 12)
    cols["PercentTradesWBalance"] = noisy(65, 10, 12, 0, 100)

    # Structured missingness.
    never_delq = rng.random(n) < 0.25 * _sigmoid_np(-u)
    cols["MSinceMostRecentDelq"][never_delq] = -7.0
    no_inq = rng.random(n) < 0.10
    cols["MSinceMostRecentInqexcl7days"][no_inq] = -7.0
    for name, p in (
        ("NetFractionInstallBurden", 0.20),
        ("NumInstallTradesWBalance", 0.06),
        ("NetFractionRevolvingBurden", 0.03),
        ("NumRevolvingTradesWBalance", 0.03),
        ("NumBank2NatlTradesWHighUtilization", 0.05),
        ("MSinceOldestTradeOpen", 0.02),
    ):
        mask = rng.random(n) < p
        cols[name][mask] = -8.0

    labels = (rng.random(n) < _sigmoid_np(1.6 * u)).astype(np.int8)

    # Rows with no bureau record at all.
    no_record = rng.random(n) < 0.015
    for name in cols:
        cols[name][no_record] = -9.0
    labels[no_record] = (rng.random(int(np.sum(no_record))) < 0.55).astype(np.int8)

    if planted:
        _plant_segment(schema, cols, labels, u, rng)

    columns = tuple(cols[f.name] for f in schema.features)
    return Dataset(
        schema=schema,
        columns=columns,
        labels=labels,
        weights=np.ones(n, dtype=np.float64),
    )


def _plant_segment(schema, cols, labels, u, rng) -> None:
    """Overwrite rows to create the exactly-700-strong subprime segment."""
    n = len(labels)
    count = PLANTED_SEGMENT_SIZE
    candidates = np.arange(n)
    rng.shuffle(candidates)
    segment = np.sort(candidates[: count + 10])
    exceptions = segment[-10:]
    segment = segment[:count]
    if DEMO_RULE_ROW not in segment:
        segment[0] = DEMO_RULE_ROW
        segment = np.sort(segment)
        exceptions = exceptions[~np.isin(exceptions, [DEMO_RULE_ROW])]
        while len(exceptions) < 10:
            extra = int(candidates[count + 10])
            if extra not in segment and extra not in exceptions:
                exceptions = np.append(exceptions, extra)
            candidates = np.roll(candidates, -1)

    m = len(segment)
    # Mild profiles elsewhere: every single mild predicate is shared with
    # some low-predicted rows, so no one-predicate rule can cover the
    # segment; the two planted extremes are what characterize it.
    seg_u = 0.5 + np.abs(rng.normal(0.0, 0.3, m))
    for name, (center, slope, sd, lo, hi) in _PROFILE.items():
        cols[name][segment] = _clip_round(
            center + slope * seg_u + rng.normal(0.0, sd, m), lo, hi
        )
    cols["ExternalRiskEstimate"][segment] = _clip_round(rng.uniform(33, 50, m), 33, 50)
    cols["NetFractionRevolvingBurden"][segment] = _clip_round(rng.uniform(73, 99, m), 73, 99)
    labels[segment] = 1

    # The demo row is otherwise slightly better than average, so the two
    # planted extremes are the only sharp predicates it satisfies and
    # every consistent two-predicate rule for it tops out at the segment.
    demo_u = np.full(1, -0.3)
    for name, (center, slope, sd, lo, hi) in _PROFILE.items():
        cols[name][DEMO_RULE_ROW] = _clip_round(
            center + slope * demo_u + rng.normal(0.0, sd, 1), lo, hi
        )[0]
    cols["ExternalRiskEstimate"][DEMO_RULE_ROW] = 42.0
    cols["NetFractionRevolvingBurden"][DEMO_RULE_ROW] = 81.0

    exc_u = np.full(10, -2.6)
    for name, (center, slope, sd, lo, hi) in _PROFILE.items():
        cols[name][exceptions] = _clip_round(
            center + slope * exc_u + rng.normal(0.0, sd, 10), lo, hi
        )
    # First five: lowest possible risk estimate only; last five: highest
    # possible burden only.  Sitting exactly on the segment extremes
    # makes every one-sided cut through the segment range include an
    # exception, so no single predicate can cover the segment alone.
    cols["ExternalRiskEstimate"][exceptions[:5]] = 33.0
    cols["NetFractionRevolvingBurden"][exceptions[:5]] = _clip_round(rng.uniform(5, 30, 5), 5, 30)
    cols["ExternalRiskEstimate"][exceptions[5:]] = _clip_round(rng.uniform(85, 94, 5), 85, 94)
    cols["NetFractionRevolvingBurden"][exceptions[5:]] = 99.0
    labels[exceptions] = 0


#: (center, slope, sd, lo, hi) per feature for profile-driven overwrites.
_PROFILE = {
    "MSinceOldestTradeOpen": (180, -40, 30, 12, 500),
    "MSinceMostRecentTradeOpen": (9, -2.5, 4, 0, 60),
    "AverageMInFile": (75, -20, 10, 4, 240),
    "NumSatisfactoryTrades": (20, -6, 3, 0, 65),
    "NumTotalTrades": (21, -4, 5, 1, 85),
    "NumTradesOpeninLast12M": (1.6, 1.2, 1.0, 0, 12),
    "PercentTradesNeverDelq": (93, -7, 4, 20, 100),
    "MSinceMostRecentDelq": (30, -12, 8, 0, 83),
    "MaxDelq2PublicRecLast12M": (6.2, -1.4, 1.0, 0, 9),
    "MaxDelqEver": (6.8, -1.4, 1.0, 1, 9),
    "NumTrades60Ever2DerogPubRec": (0.5, 0.9, 0.6, 0, 12),
    "NumTrades90Ever2DerogPubRec": (0.3, 0.7, 0.5, 0, 12),
    "PercentInstallTrades": (33, 6, 8, 0, 100),
    "NetFractionInstallBurden": (45, 12, 15, 0, 300),
    "NumInstallTradesWBalance": (2.2, 0.8, 1.0, 0, 16),
    "MSinceMostRecentInqexcl7days": (4, -2, 3, 0, 24),
    "NumInqLast6M": (1.3, 1.1, 1.0, 0, 20),
    "NumInqLast6Mexcl7days": (1.1, 1.0, 1.0, 0, 20),
    "NumRevolvingTradesWBalance": (4, 1.5, 2.0, 0, 25),
    "NumBank2NatlTradesWHighUtilization": (0.8, 1.2, 1.0, 0, 12),
    "PercentTradesWBalance": (65, 10, 12, 0, 100),
}


def demo_rule_observation(dataset: Dataset) -> dict:
    """Feature values of the canonical planted-segment row."""
    return dataset.row(DEMO_RULE_ROW)


def _sigmoid_np(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# ---------------------------------------------------------------------------
# German-style portfolio
# ---------------------------------------------------------------------------

_NO_CHECKING = SpecialValue(-8.0, "no checking account")
_NO_SAVINGS = SpecialValue(-8.0, "savings unknown or none")


def german_schema() -> Schema:
    """20 mixed features in 2 subscales.

    Checking-account status and savings are ordinal (0 = least money),
    with their no-account category as a sentinel code, and carry the
    only monotonicity constraints: more money, lower risk.
    """

    def num(name, subscale, mono="none", specials=()):
        return FeatureSpec(name, "numeric", mono, tuple(specials), subscale)

    def cat(name, subscale):
        return FeatureSpec(name, "categorical", "none", (), subscale)

    features = (
        num("checking_status", "credit_loan", "decreasing", (_NO_CHECKING,)),
        num("duration_months", "credit_loan"),
        cat("credit_history", "credit_loan"),
        cat("purpose", "credit_loan"),
        num("credit_amount", "credit_loan"),
        num("savings_status", "credit_loan", "decreasing", (_NO_SAVINGS,)),
        cat("employment_since", "personal"),
        num("installment_rate", "credit_loan"),
        cat("personal_status", "personal"),
        cat("other_parties", "credit_loan"),
        num("residence_since", "personal"),
        cat("property_magnitude", "personal"),
        num("age_years", "personal"),
        cat("other_payment_plans", "credit_loan"),
        cat("housing", "personal"),
        num("existing_credits", "credit_loan"),
        cat("job", "personal"),
        num("num_dependents", "personal"),
        cat("own_telephone", "personal"),
        cat("foreign_worker", "personal"),
    )
    return Schema(
        features=features,
        label_name="class",
        positive_label_meaning="high credit risk (bad)",
        subscale_order=("credit_loan", "personal"),
    )


def generate_german_like(n_rows: int = 1000, seed: int = 7011) -> Dataset:
    """Sample a German-style portfolio with a ~30% bad rate."""
    schema = german_schema()
    rng = np.random.default_rng(seed)
    n = n_rows
    u = rng.normal(0.0, 1.0, n)

    checking = np.full(n, -8.0)
    has_checking = rng.random(n) < 0.62
    levels = np.clip(np.round(1.0 - 0.8 * u[has_checking] + rng.normal(0, 0.7, int(np.sum(has_checking)))), 0, 2)
    checking[has_checking] = levels

    savings = np.full(n, -8.0)
    has_savings = rng.random(n) < 0.82
    sav_levels = np.clip(np.round(1.2 - 0.7 * u[has_savings] + rng.normal(0, 0.9, int(np.sum(has_savings)))), 0, 3)
    savings[has_savings] = sav_levels

    duration = _clip_round(21 + 8 * u + rng.normal(0, 9, n), 4, 72)
    amount = _clip_round(np.exp(7.8 + 0.35 * u + rng.normal(0, 0.7, n)), 250, 20000)
    age = _clip_round(36 - 3 * u + rng.normal(0, 10, n), 19, 75)
    installment_rate = _clip_round(2.9 + 0.3 * u + rng.normal(0, 1.0, n), 1, 4)
    residence = _clip_round(2.8 + rng.normal(0, 1.1, n), 1, 4)
    existing_credits = _clip_round(1.4 + 0.1 * u + rng.normal(0, 0.55, n), 1, 4)
    dependents = _clip_round(1.1 + rng.normal(0, 0.35, n), 1, 2)

    history = _pick(rng, n, u, ("critical", "existing_paid", "delayed", "all_paid", "no_credits"),
                    base=(0.29, 0.53, 0.09, 0.05, 0.04), tilt=(-0.5, 0.1, 0.4, 0.5, 0.5))
    purpose = _pick(rng, n, np.zeros(n), ("radio_tv", "new_car", "furniture", "used_car",
                                          "business", "education", "repairs", "domestic",
                                          "retraining", "other"),
                    base=(0.28, 0.23, 0.18, 0.10, 0.10, 0.05, 0.02, 0.02, 0.01, 0.01), tilt=None)
    employment = _pick(rng, n, u, ("ge_7y", "1_to_4y", "4_to_7y", "lt_1y", "unemployed"),
                       base=(0.25, 0.34, 0.17, 0.17, 0.07), tilt=(-0.4, 0.0, -0.2, 0.35, 0.5))
    personal = _pick(rng, n, np.zeros(n), ("male_single", "female", "male_married", "male_divorced"),
                     base=(0.55, 0.31, 0.09, 0.05), tilt=None)
    parties = _pick(rng, n, u, ("none", "guarantor", "co_applicant"),
                    base=(0.91, 0.05, 0.04), tilt=(0.0, -0.5, 0.4))
    prop = _pick(rng, n, u, ("car_other", "real_estate", "building_society", "unknown"),
                 base=(0.33, 0.28, 0.23, 0.16), tilt=(0.0, -0.4, -0.1, 0.5))
    plans = _pick(rng, n, u, ("none", "bank", "stores"),
                  base=(0.81, 0.14, 0.05), tilt=(-0.1, 0.4, 0.3))
    housing = _pick(rng, n, u, ("own", "rent", "for_free"),
                    base=(0.71, 0.18, 0.11), tilt=(-0.2, 0.4, 0.2))
    job = _pick(rng, n, np.zeros(n), ("skilled", "unskilled_resident", "management", "unemployed_nonresident"),
                base=(0.63, 0.20, 0.15, 0.02), tilt=None)
    telephone = _pick(rng, n, np.zeros(n), ("none", "yes"), base=(0.6, 0.4), tilt=None)
    foreign = _pick(rng, n, np.zeros(n), ("yes", "no"), base=(0.96, 0.04), tilt=None)

    logit = (
        -1.35
        + 0.85 * u
        + 0.55 * (checking == 0)
        + 0.25 * (checking == 1)
        - 0.65 * (checking == -8)
        + 0.35 * (savings == 0)
        - 0.35 * (savings >= 2)
        + 0.018 * (duration - 21)
        + (history == "delayed") * 0.3
        - (history == "critical") * 0.3
    )
    labels = (rng.random(n) < _sigmoid_np(logit)).astype(np.int8)
    if labels.sum() < 2:  # degenerate draws never happen at normal sizes
        labels[:2] = 1

    values = {
        "checking_status": checking,
        "duration_months": duration,
        "credit_history": history,
        "purpose": purpose,
        "credit_amount": amount,
        "savings_status": savings,
        "employment_since": employment,
        "installment_rate": installment_rate,
        "personal_status": personal,
        "other_parties": parties,
        "residence_since": residence,
        "property_magnitude": prop,
        "age_years": age,
        "other_payment_plans": plans,
        "housing": housing,
        "existing_credits": existing_credits,
        "job": job,
        "num_dependents": dependents,
        "own_telephone": telephone,
        "foreign_worker": foreign,
    }
    columns = tuple(values[f.name] for f in schema.features)
    return Dataset(
        schema=schema,
        columns=columns,
        labels=labels,
        weights=np.ones(n, dtype=np.float64),
    )


def _pick(rng, n, u, tokens, base, tilt):
    """Draw tokens with probabilities optionally tilted by the latent risk."""
    base = np.asarray(base, dtype=np.float64)
    if tilt is None:
        idx = rng.choice(len(tokens), size=n, p=base / base.sum())
        return np.asarray([tokens[i] for i in idx], dtype=object)
    tilt = np.asarray(tilt, dtype=np.float64)
    logits = np.log(base)[None, :] + u[:, None] * tilt[None, :]
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    cum = np.cumsum(probs, axis=1)
    draws = rng.random(n)[:, None]
    idx = (draws > cum).sum(axis=1)
    return np.asarray([tokens[i] for i in idx], dtype=object)
