"""Ranked risk factors for one prediction.

The most influential subscales are the ones with the largest weighted
probability; within each, the most influential conditions are the active
binary columns with the largest positive points.  Negative-point active
conditions reduce risk and are reported separately as protective
factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .riskmodel import PredictionBreakdown, TwoLayerModel, predict


@dataclass(frozen=True)
class RiskFactor:
    condition: str
    subscale: str
    subscale_rank: int  # 1-based
    points: float  # coefficient of the active column
    subscale_points: float  # weight * subscale probability


def important_factors(
    model: TwoLayerModel,
    x: Mapping[str, object] | PredictionBreakdown,
    n_subscales: int = 2,
    n_factors_each: int = 2,
    protective: bool = False,
) -> list[RiskFactor]:
    """Top conditions within the top subscales, in decreasing importance.

    Subscales rank by their weighted probability; conditions rank by
    their points.  Ties keep model declaration order, so output is
    deterministic.  Only active columns are listed: positive points by
    default, negative points when ``protective`` is set.  Returns fewer
    entries when fewer conditions are active.
    """
    breakdown = x if isinstance(x, PredictionBreakdown) else predict(model, x)
    # stable sort on the negated contribution keeps declaration order on ties
    order = sorted(
        range(len(breakdown.subscales)),
        key=lambda i: -breakdown.subscales[i].contribution,
    )
    factors: list[RiskFactor] = []
    for rank, idx in enumerate(order[:n_subscales], start=1):
        sub = breakdown.subscales[idx]
        if protective:
            terms = [t for t in sub.active_terms if t.points < 0]
            terms.sort(key=lambda t: t.points)
        else:
            terms = [t for t in sub.active_terms if t.points > 0]
            terms.sort(key=lambda t: -t.points)
        for term in terms[:n_factors_each]:
            factors.append(
                RiskFactor(
                    condition=term.condition,
                    subscale=sub.name,
                    subscale_rank=rank,
                    points=term.points,
                    subscale_points=sub.contribution,
                )
            )
    return factors
