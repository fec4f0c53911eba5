"""Threshold learning and binary encoding of observations.

Numeric features are cut at thresholds chosen by greedy entropy
minimization, then expressed as one-sided interval indicators (so that
non-negative weights yield monotone piecewise-constant scores), two-sided
cells for direction-free features, one indicator per declared sentinel
code, and a not-missing indicator for monotone features.  Categorical
features get one indicator per observed token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data import DataError, Dataset, FeatureSpec, Schema

#: Default cap on learned thresholds per feature.
DEFAULT_MAX_THRESHOLDS = 5

_GAIN_TOL = 1e-12

ONE_SIDED_LT = "one_sided_lt"
ONE_SIDED_GE = "one_sided_ge"
TWO_SIDED = "two_sided"
CATEGORY = "category"
SPECIAL = "special"
NOT_MISSING = "not_missing"


class EncodingDiagnostics:
    """Counters for benign encode-time anomalies (e.g. unseen tokens)."""

    def __init__(self):
        self.unknown_tokens: dict[str, int] = {}

    def record_unknown_token(self, feature: str) -> None:
        self.unknown_tokens[feature] = self.unknown_tokens.get(feature, 0) + 1

    @property
    def total_unknown_tokens(self) -> int:
        return sum(self.unknown_tokens.values())


#: Shared default sink for encode-time diagnostics.
DIAGNOSTICS = EncodingDiagnostics()


def _fmt_num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _is_half_step(t: float) -> bool:
    # Learned thresholds are midpoints; on integer grids x < 63.5 reads
    # more naturally as x <= 63.
    return (t - math.floor(t)) == 0.5


@dataclass(frozen=True)
class BinColumn:
    """One binary design column with its provenance."""

    feature: str
    kind: str
    index: int
    threshold: float | None = None  # one_sided_lt / one_sided_ge
    low: float | None = None  # two_sided lower edge (inclusive, may be -inf)
    high: float | None = None  # two_sided upper edge (exclusive, may be +inf)
    token: str | None = None  # category
    code: float | None = None  # special
    meaning: str = ""  # declared meaning of the special code

    def describe(self) -> str:
        """Predicate text for the column being active (bit = 1)."""
        if self.kind == ONE_SIDED_LT:
            t = float(self.threshold)
            if _is_half_step(t):
                return f"{self.feature} <= {_fmt_num(math.floor(t))}"
            return f"{self.feature} < {_fmt_num(t)}"
        if self.kind == ONE_SIDED_GE:
            t = float(self.threshold)
            if _is_half_step(t):
                return f"{self.feature} >= {_fmt_num(math.ceil(t))}"
            return f"{self.feature} >= {_fmt_num(t)}"
        if self.kind == TWO_SIDED:
            if math.isinf(self.low):
                return f"{self.feature} < {_fmt_num(self.high)}"
            if math.isinf(self.high):
                return f"{self.feature} >= {_fmt_num(self.low)}"
            return f"{_fmt_num(self.low)} <= {self.feature} < {_fmt_num(self.high)}"
        if self.kind == CATEGORY:
            return f"{self.feature} = {self.token}"
        if self.kind == SPECIAL:
            note = f" ({self.meaning})" if self.meaning else ""
            return f"{self.feature} is {_fmt_num(self.code)}{note}"
        if self.kind == NOT_MISSING:
            return f"{self.feature} is not missing"
        raise ValueError(self.kind)

    def describe_complement(self) -> str:
        """Predicate text for the column being inactive (bit = 0)."""
        if self.kind == ONE_SIDED_LT:
            t = float(self.threshold)
            if _is_half_step(t):
                return f"{self.feature} >= {_fmt_num(math.ceil(t))}"
            return f"{self.feature} >= {_fmt_num(t)}"
        if self.kind == ONE_SIDED_GE:
            t = float(self.threshold)
            if _is_half_step(t):
                return f"{self.feature} <= {_fmt_num(math.floor(t))}"
            return f"{self.feature} < {_fmt_num(t)}"
        if self.kind == TWO_SIDED:
            return f"{self.feature} outside [{_fmt_num(self.low)}, {_fmt_num(self.high)})"
        if self.kind == CATEGORY:
            return f"{self.feature} != {self.token}"
        if self.kind == SPECIAL:
            return f"{self.feature} is not {_fmt_num(self.code)}"
        if self.kind == NOT_MISSING:
            return f"{self.feature} is missing"
        raise ValueError(self.kind)


@dataclass(frozen=True)
class BinarizationScheme:
    """Learned thresholds and the full ordered column layout."""

    schema: Schema
    columns: tuple[BinColumn, ...]
    thresholds: Mapping[str, tuple[float, ...]]
    category_tokens: Mapping[str, tuple[str, ...]]
    max_thresholds_per_feature: int

    def __post_init__(self):
        for name, ts in self.thresholds.items():
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise DataError(f"feature {name!r}: thresholds must be strictly increasing")
        for i, col in enumerate(self.columns):
            if col.index != i:
                raise DataError("column indices must match their positions")

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def feature_columns(self, name: str) -> tuple[BinColumn, ...]:
        return tuple(c for c in self.columns if c.feature == name)


@dataclass(frozen=True)
class BinaryMatrix:
    """Encoded observations: one row per observation, one bit per column."""

    scheme: BinarizationScheme
    bits: np.ndarray  # uint8, shape (n_rows, n_columns)

    def __post_init__(self):
        if self.bits.ndim != 2 or self.bits.shape[1] != self.scheme.n_columns:
            raise DataError("bit matrix shape does not match scheme")

    @property
    def n_rows(self) -> int:
        return self.bits.shape[0]

    @property
    def n_columns(self) -> int:
        return self.bits.shape[1]


def entropy_of_split(
    values: np.ndarray,
    labels: np.ndarray,
    theta: float,
    weights: np.ndarray | None = None,
) -> float:
    """Weighted binary entropy of partitioning at ``theta``.

    The two parts are ``x < theta`` and ``x >= theta``; counts are
    replaced by weight sums and 0*log(0) is taken as 0.  Natural log.
    A split leaving either side empty scores +inf so it is never chosen.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    w = np.ones_like(values) if weights is None else np.asarray(weights, dtype=np.float64)
    left = values < theta
    w_left = float(np.sum(w[left]))
    w_right = float(np.sum(w[~left]))
    if w_left == 0.0 or w_right == 0.0:
        return math.inf
    total = w_left + w_right
    wp_left = float(np.sum(w[left & (labels == 1)]))
    wp_right = float(np.sum(w[~left & (labels == 1)]))
    return (w_left / total) * _binary_entropy(wp_left / w_left) + (
        w_right / total
    ) * _binary_entropy(wp_right / w_right)


def _binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log(q) - (1.0 - q) * math.log(1.0 - q)


def _entropy_curve(w: np.ndarray, wp: np.ndarray, cut_positions: np.ndarray) -> np.ndarray:
    """Split entropies at every cut position of a sorted segment.

    ``cut_positions[j] = i`` means the left part is elements ``[0, i]``.
    Vectorized over all candidate cuts.
    """
    cw = np.cumsum(w)
    cwp = np.cumsum(wp)
    total_w = cw[-1]
    total_wp = cwp[-1]
    w1 = cw[cut_positions]
    wp1 = cwp[cut_positions]
    w2 = total_w - w1
    wp2 = total_wp - wp1
    with np.errstate(divide="ignore", invalid="ignore"):
        q1 = wp1 / w1
        q2 = wp2 / w2
        h1 = -np.where(q1 > 0, q1 * np.log(q1), 0.0) - np.where(
            q1 < 1, (1 - q1) * np.log(1 - q1), 0.0
        )
        h2 = -np.where(q2 > 0, q2 * np.log(q2), 0.0) - np.where(
            q2 < 1, (1 - q2) * np.log(1 - q2), 0.0
        )
    return (w1 / total_w) * h1 + (w2 / total_w) * h2


def select_thresholds(
    values: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray | None = None,
    max_thresholds: int = DEFAULT_MAX_THRESHOLDS,
) -> list[float]:
    """Choose up to ``max_thresholds`` cut points by greedy entropy splits.

    Candidate cuts are midpoints between adjacent distinct sorted values.
    Segments are split best-gain-first, recursively, until the budget is
    exhausted or no split reduces entropy.  Ties pick the smallest
    threshold, so results are deterministic.  Returns thresholds sorted
    ascending; fewer than requested when the data runs out.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    w = np.ones_like(values) if weights is None else np.asarray(weights, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    v = values[order]
    wo = w[order]
    wpo = wo * (labels[order] == 1)

    def best_split(lo: int, hi: int):
        """Best (gain, theta, cut_index) inside segment [lo, hi), or None."""
        seg_v = v[lo:hi]
        boundaries = np.flatnonzero(seg_v[:-1] != seg_v[1:])
        if len(boundaries) == 0:
            return None
        seg_w = wo[lo:hi]
        seg_wp = wpo[lo:hi]
        total_w = float(np.sum(seg_w))
        total_wp = float(np.sum(seg_wp))
        parent = _binary_entropy(total_wp / total_w)
        if parent <= 0.0:
            return None
        entropies = _entropy_curve(seg_w, seg_wp, boundaries)
        best = int(np.argmin(entropies))  # first minimum == smallest theta
        gain = parent - float(entropies[best])
        if gain <= _GAIN_TOL:
            return None
        i = int(boundaries[best])
        theta = float((seg_v[i] + seg_v[i + 1]) / 2.0)
        return gain, theta, lo + i + 1

    segments = [(0, len(v))]
    chosen: list[float] = []
    while len(chosen) < max_thresholds:
        candidates = []
        for seg_id, (lo, hi) in enumerate(segments):
            found = best_split(lo, hi)
            if found is not None:
                gain, theta, cut = found
                candidates.append((-gain, theta, seg_id, cut))
        if not candidates:
            break
        candidates.sort()  # max gain first; ties by smallest theta
        _, theta, seg_id, cut = candidates[0]
        lo, hi = segments.pop(seg_id)
        segments.extend([(lo, cut), (cut, hi)])
        chosen.append(theta)
    return sorted(chosen)


def _usable_mask(col: np.ndarray, spec: FeatureSpec) -> np.ndarray:
    """Rows whose value is an ordinary magnitude (finite, not a sentinel)."""
    mask = np.isfinite(col)
    for code in spec.special_codes:
        mask &= col != code
    return mask


def layout_columns(
    schema: Schema,
    thresholds: Mapping[str, tuple[float, ...]],
    category_tokens: Mapping[str, tuple[str, ...]],
) -> tuple[BinColumn, ...]:
    """Deterministic column layout from learned thresholds and tokens.

    Per numeric feature the emitted columns are, in order: interval
    indicators (ascending threshold), a not-missing indicator for
    monotone features, then one indicator per declared sentinel code.
    Categorical features emit one indicator per token.
    """
    columns: list[BinColumn] = []

    def add(**kwargs) -> None:
        columns.append(BinColumn(index=len(columns), **kwargs))

    for spec in schema.features:
        if spec.kind == "categorical":
            for tok in category_tokens.get(spec.name, ()):
                add(feature=spec.name, kind=CATEGORY, token=tok)
            continue
        ts = thresholds.get(spec.name, ())
        if spec.monotonicity == "decreasing":
            for t in ts:
                add(feature=spec.name, kind=ONE_SIDED_LT, threshold=t)
        elif spec.monotonicity == "increasing":
            for t in ts:
                add(feature=spec.name, kind=ONE_SIDED_GE, threshold=t)
        else:
            edges = [-math.inf, *ts, math.inf]
            for lo, hi in zip(edges, edges[1:]):
                add(feature=spec.name, kind=TWO_SIDED, low=lo, high=hi)
        if spec.is_monotone():
            add(feature=spec.name, kind=NOT_MISSING)
        for sv in spec.special_values:
            add(feature=spec.name, kind=SPECIAL, code=sv.code, meaning=sv.meaning)
    return tuple(columns)


def build_scheme(
    dataset: Dataset,
    max_thresholds: int = DEFAULT_MAX_THRESHOLDS,
) -> BinarizationScheme:
    """Learn thresholds on non-sentinel values and lay out all columns."""
    thresholds: dict[str, tuple[float, ...]] = {}
    tokens: dict[str, tuple[str, ...]] = {}
    for spec, col in zip(dataset.schema.features, dataset.columns):
        if spec.kind == "categorical":
            observed = tuple(sorted({str(t) for t in col}))
            if not observed:
                raise DataError(f"feature {spec.name!r}: no usable values")
            tokens[spec.name] = observed
            continue
        usable = _usable_mask(col, spec)
        if not np.any(usable):
            raise DataError(f"feature {spec.name!r}: no usable values")
        ts = select_thresholds(
            col[usable], dataset.labels[usable], dataset.weights[usable], max_thresholds
        )
        thresholds[spec.name] = tuple(ts)

    return BinarizationScheme(
        schema=dataset.schema,
        columns=layout_columns(dataset.schema, thresholds, tokens),
        thresholds=thresholds,
        category_tokens=tokens,
        max_thresholds_per_feature=max_thresholds,
    )


def _encode_numeric(value: float, spec: FeatureSpec, cols: tuple[BinColumn, ...]) -> list[int]:
    bits = []
    is_special = value in spec.special_codes
    is_missing = is_special or not math.isfinite(value)
    for c in cols:
        if c.kind == SPECIAL:
            bits.append(1 if is_special and value == c.code else 0)
        elif is_missing:
            bits.append(0)
        elif c.kind == ONE_SIDED_LT:
            bits.append(1 if value < c.threshold else 0)
        elif c.kind == ONE_SIDED_GE:
            bits.append(1 if value >= c.threshold else 0)
        elif c.kind == TWO_SIDED:
            bits.append(1 if c.low <= value < c.high else 0)
        elif c.kind == NOT_MISSING:
            bits.append(1)
        else:
            raise ValueError(c.kind)
    return bits


def encode(
    x: Mapping[str, object],
    scheme: BinarizationScheme,
    diagnostics: EncodingDiagnostics | None = None,
) -> np.ndarray:
    """Encode one observation into a binary row.

    Sentinel-coded cells activate their sentinel column and deactivate
    the not-missing and interval columns for that feature.  Tokens never
    seen at training time encode to all-zero category bits and are
    counted in the diagnostics sink.
    """
    diagnostics = DIAGNOSTICS if diagnostics is None else diagnostics
    row = np.zeros(scheme.n_columns, dtype=np.uint8)
    for spec in scheme.schema.features:
        cols = scheme.feature_columns(spec.name)
        if spec.name not in x:
            raise DataError(f"observation is missing feature {spec.name!r}")
        value = x[spec.name]
        if spec.kind == "categorical":
            token = str(value)
            known = False
            for c in cols:
                if c.token == token:
                    row[c.index] = 1
                    known = True
            if not known:
                diagnostics.record_unknown_token(spec.name)
        else:
            bits = _encode_numeric(float(value), spec, cols)
            for c, b in zip(cols, bits):
                row[c.index] = b
    return row


def encode_dataset(dataset: Dataset, scheme: BinarizationScheme) -> BinaryMatrix:
    """Vectorized encoding of a whole dataset."""
    n = dataset.n_rows
    bits = np.zeros((n, scheme.n_columns), dtype=np.uint8)
    for spec in scheme.schema.features:
        col = dataset.column(spec.name)
        cols = scheme.feature_columns(spec.name)
        if spec.kind == "categorical":
            tokens = col.astype(str)
            for c in cols:
                bits[:, c.index] = tokens == c.token
            continue
        values = col.astype(np.float64)
        usable = _usable_mask(values, spec)
        for c in cols:
            if c.kind == ONE_SIDED_LT:
                bits[:, c.index] = usable & (values < c.threshold)
            elif c.kind == ONE_SIDED_GE:
                bits[:, c.index] = usable & (values >= c.threshold)
            elif c.kind == TWO_SIDED:
                bits[:, c.index] = usable & (values >= c.low) & (values < c.high)
            elif c.kind == NOT_MISSING:
                bits[:, c.index] = usable
            elif c.kind == SPECIAL:
                bits[:, c.index] = values == c.code
    return BinaryMatrix(scheme=scheme, bits=bits)


def one_sided_score(
    value: float,
    spec: FeatureSpec,
    cols: tuple[BinColumn, ...],
    beta: np.ndarray,
) -> float:
    """Direct per-feature score: sum of coefficients of active columns.

    Accumulates in column order with plain float addition; the score
    table built by :func:`to_two_sided` reproduces this bit-exactly.
    """
    bits = _encode_numeric(float(value), spec, cols)
    total = 0.0
    for c, b in zip(cols, bits):
        if b:
            total += float(beta[c.index])
    return total


@dataclass(frozen=True)
class ScoreTable:
    """Per-feature points table equivalent to the one-sided weighted sum.

    ``intervals`` holds ``(low, high, points)`` rows partitioning the
    non-missing range; ``specials`` holds ``(code, meaning, points)``;
    ``categories`` holds ``(token, points)`` for categorical features.
    """

    feature: str
    kind: str  # feature monotonicity, or "categorical"
    intervals: tuple[tuple[float, float, float], ...]
    specials: tuple[tuple[float, str, float], ...]
    categories: tuple[tuple[str, float], ...]

    def value_at(self, x: object) -> float:
        if self.kind == "categorical":
            token = str(x)
            for tok, pts in self.categories:
                if tok == token:
                    return pts
            return 0.0
        value = float(x)
        for code, _, pts in self.specials:
            if value == code:
                return pts
        if not math.isfinite(value):
            return 0.0
        for lo, hi, pts in self.intervals:
            if lo <= value < hi:
                return pts
        return 0.0

    def rows(self) -> list[dict]:
        """Rendering rows: condition text plus points."""
        out = []
        for lo, hi, pts in self.intervals:
            if math.isinf(lo) and math.isinf(hi):
                text = f"{self.feature} is not missing"
            elif math.isinf(lo):
                text = f"{self.feature} < {_fmt_num(hi)}"
            elif math.isinf(hi):
                text = f"{self.feature} >= {_fmt_num(lo)}"
            else:
                text = f"{_fmt_num(lo)} <= {self.feature} < {_fmt_num(hi)}"
            out.append({"condition": text, "points": pts})
        for code, meaning, pts in self.specials:
            note = f" ({meaning})" if meaning else ""
            out.append({"condition": f"{self.feature} is {_fmt_num(code)}{note}", "points": pts})
        for token, pts in self.categories:
            out.append({"condition": f"{self.feature} = {token}", "points": pts})
        return out


def to_two_sided(
    scheme: BinarizationScheme,
    feature: str,
    beta: np.ndarray,
) -> ScoreTable:
    """Fold one-sided coefficients into a two-sided points table.

    For a decreasing feature the cell ``[theta_j, theta_j+1)`` collects
    every ``x < theta_l`` coefficient with ``l > j`` plus the not-missing
    coefficient; increasing features mirror this.  Sums run in column
    order so table lookups equal the direct one-sided sum bit for bit.
    """
    spec = scheme.schema.feature(feature)
    cols = scheme.feature_columns(feature)

    def ordered_sum(active: set[int]) -> float:
        total = 0.0
        for c in cols:
            if c.index in active:
                total += float(beta[c.index])
        return total

    specials = tuple(
        (float(c.code), c.meaning, float(beta[c.index])) for c in cols if c.kind == SPECIAL
    )
    if spec.kind == "categorical":
        categories = tuple(
            (c.token, float(beta[c.index])) for c in cols if c.kind == CATEGORY
        )
        return ScoreTable(feature, "categorical", (), specials, categories)

    interval_cols = [c for c in cols if c.kind in (ONE_SIDED_LT, ONE_SIDED_GE, TWO_SIDED)]
    nm = [c for c in cols if c.kind == NOT_MISSING]
    ts = list(scheme.thresholds.get(feature, ()))
    edges = [-math.inf, *ts, math.inf]
    intervals = []
    for lo, hi in zip(edges, edges[1:]):
        active = set(c.index for c in nm)
        for c in interval_cols:
            if c.kind == ONE_SIDED_LT:
                # active when x < threshold, i.e. the whole cell sits below it
                if hi <= c.threshold:
                    active.add(c.index)
            elif c.kind == ONE_SIDED_GE:
                if lo >= c.threshold:
                    active.add(c.index)
            else:
                if c.low == lo and c.high == hi:
                    active.add(c.index)
        intervals.append((lo, hi, ordered_sum(active)))
    return ScoreTable(feature, spec.monotonicity, tuple(intervals), specials, ())
