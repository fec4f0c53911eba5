"""Case-based explanations: past observations that satisfy the current
case's rule, ranked by how many binary features they share with it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset
from .rules import ExplainContext, Query, Rule


@dataclass(frozen=True)
class CaseMatch:
    row_index: int
    similarity: int  # shared original-column bits with the query
    prediction: int  # model prediction for the past case
    true_label: int
    display_values: dict[str, object]


def similar_cases(
    query: Query,
    rule: Rule,
    ctx: ExplainContext,
    dataset: Dataset,
    k: int = 5,
    display_features: Sequence[str] = (),
) -> list[CaseMatch]:
    """Top-k rows satisfying the rule, most similar to the query first.

    Similarity counts agreement on both set and unset original columns
    (complements would double-count, so they are excluded).  Values x
    and x' falling in the same learned interval agree on all of that
    feature's columns.  Ties break toward the lowest row index.  When
    the query is itself a training row it is not its own neighbor, so a
    support-1 rule yields an empty list.
    """
    p = ctx.n_original
    if rule.columns:
        satisfied = np.all(ctx.bits[:, list(rule.columns)] == 1, axis=1)
    else:
        satisfied = np.ones(ctx.n_rows, dtype=bool)
    if query.row_index is not None:
        satisfied[query.row_index] = False
    candidates = np.flatnonzero(satisfied)
    if len(candidates) == 0:
        return []
    query_orig = query.bits[:p]
    agreement = np.sum(ctx.bits[candidates, :p] == query_orig, axis=1)
    order = np.lexsort((candidates, -agreement))
    top = candidates[order][:k]
    sims = agreement[order][:k]
    out = []
    for i, s in zip(top, sims):
        row = dataset.row(int(i))
        out.append(
            CaseMatch(
                row_index=int(i),
                similarity=int(s),
                prediction=int(ctx.predictions[int(i)]),
                true_label=int(dataset.labels[int(i)]),
                display_values={name: row[name] for name in display_features if name in row},
            )
        )
    return out
