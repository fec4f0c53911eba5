"""Transparent credit-risk scoring and explanation toolkit.

Trains a two-layer additive risk model under monotonicity constraints,
explains predictions through ranked risk factors, globally-consistent
sparse rules, and similar past cases, and serves the whole pipeline over
an HTTP API for interactive what-if exploration.
"""

__version__ = "0.1.0"

from .data import Dataset, FeatureSpec, FoldAssignment, Schema
from .binarize import BinarizationScheme, BinaryMatrix, BinColumn, ScoreTable
from .riskmodel import PredictionBreakdown, SubscaleModel, TwoLayerModel

__all__ = [
    "Dataset",
    "FeatureSpec",
    "FoldAssignment",
    "Schema",
    "BinarizationScheme",
    "BinaryMatrix",
    "BinColumn",
    "ScoreTable",
    "PredictionBreakdown",
    "SubscaleModel",
    "TwoLayerModel",
    "__version__",
]
