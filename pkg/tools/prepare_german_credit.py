#!/usr/bin/env python3
"""Convert the public Statlog German credit file into the package's CSV.

Input: the original space-separated file (``german.data``), 1000 rows of
categorical A-codes and integers, label 1 = good / 2 = bad.

Output: ``data/german_credit.csv`` matching ``data/german_schema.yaml``:
readable category tokens, ordinal checking/savings levels with the
no-account categories as sentinel code -8, and labels 1 = bad.

Usage: python tools/prepare_german_credit.py /path/to/german.data
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "german_credit.csv"

CHECKING = {"A11": "0", "A12": "1", "A13": "2", "A14": "-8"}
SAVINGS = {"A61": "0", "A62": "1", "A63": "2", "A64": "3", "A65": "-8"}
HISTORY = {
    "A30": "no_credits",
    "A31": "all_paid",
    "A32": "existing_paid",
    "A33": "delayed",
    "A34": "critical",
}
PURPOSE = {
    "A40": "new_car",
    "A41": "used_car",
    "A42": "furniture",
    "A43": "radio_tv",
    "A44": "domestic",
    "A45": "repairs",
    "A46": "education",
    "A47": "vacation",
    "A48": "retraining",
    "A49": "business",
    "A410": "other",
}
EMPLOYMENT = {
    "A71": "unemployed",
    "A72": "lt_1y",
    "A73": "1_to_4y",
    "A74": "4_to_7y",
    "A75": "ge_7y",
}
PERSONAL = {
    "A91": "male_divorced",
    "A92": "female",
    "A93": "male_single",
    "A94": "male_married",
    "A95": "female_single",
}
PARTIES = {"A101": "none", "A102": "co_applicant", "A103": "guarantor"}
PROPERTY = {
    "A121": "real_estate",
    "A122": "building_society",
    "A123": "car_other",
    "A124": "unknown",
}
PLANS = {"A141": "bank", "A142": "stores", "A143": "none"}
HOUSING = {"A151": "rent", "A152": "own", "A153": "for_free"}
JOB = {
    "A171": "unemployed_nonresident",
    "A172": "unskilled_resident",
    "A173": "skilled",
    "A174": "management",
}
TELEPHONE = {"A191": "none", "A192": "yes"}
FOREIGN = {"A201": "yes", "A202": "no"}

HEADER = [
    "checking_status", "duration_months", "credit_history", "purpose",
    "credit_amount", "savings_status", "employment_since", "installment_rate",
    "personal_status", "other_parties", "residence_since", "property_magnitude",
    "age_years", "other_payment_plans", "housing", "existing_credits", "job",
    "num_dependents", "own_telephone", "foreign_worker", "class",
]

MAPPERS = [
    CHECKING, None, HISTORY, PURPOSE, None, SAVINGS, EMPLOYMENT, None,
    PERSONAL, PARTIES, None, PROPERTY, None, PLANS, HOUSING, None, JOB,
    None, TELEPHONE, FOREIGN,
]


def convert(src: Path, out: Path = OUT) -> int:
    rows = []
    for line_no, line in enumerate(src.read_text().splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 21:
            raise SystemExit(f"line {line_no}: expected 21 fields, got {len(parts)}")
        converted = []
        for value, mapper in zip(parts[:20], MAPPERS):
            if mapper is None:
                converted.append(value)
            else:
                try:
                    converted.append(mapper[value])
                except KeyError:
                    raise SystemExit(f"line {line_no}: unknown code {value!r}") from None
        label = {"1": "0", "2": "1"}.get(parts[20])
        if label is None:
            raise SystemExit(f"line {line_no}: unknown label {parts[20]!r}")
        rows.append(converted + [label])
    out.parent.mkdir(exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        writer.writerows(rows)
    return len(rows)


if __name__ == "__main__":
    if len(sys.argv) != 2:
        raise SystemExit(__doc__)
    n = convert(Path(sys.argv[1]))
    print(f"wrote {n} rows to {OUT}")
