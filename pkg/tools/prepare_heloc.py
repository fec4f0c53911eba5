#!/usr/bin/env python3
"""Convert the gated HELOC challenge file into the package's CSV.

Input: the challenge CSV (``heloc_dataset_v1.csv``), whose label column
``RiskPerformance`` holds the strings Good/Bad.

Output: ``data/heloc.csv`` matching ``data/demo_schema.yaml``, with
labels 1 = Bad.

Usage: python tools/prepare_heloc.py /path/to/heloc_dataset_v1.csv
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "heloc.csv"


def convert(src: Path, out: Path = OUT) -> int:
    with src.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if "RiskPerformance" not in reader.fieldnames:
            raise SystemExit("input lacks a RiskPerformance column")
        rows = list(reader)
    out.parent.mkdir(exist_ok=True)
    fields = [f for f in reader.fieldnames if f != "RiskPerformance"]
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields + ["RiskPerformance"])
        for row in rows:
            label = {"Bad": "1", "Good": "0"}.get(row["RiskPerformance"].strip())
            if label is None:
                raise SystemExit(f"unknown label {row['RiskPerformance']!r}")
            writer.writerow([row[f].strip() for f in fields] + [label])
    return len(rows)


if __name__ == "__main__":
    if len(sys.argv) != 2:
        raise SystemExit(__doc__)
    n = convert(Path(sys.argv[1]))
    print(f"wrote {n} rows to {OUT}")
