"""Globally-consistent conjunctive rule explanations.

A rule is a conjunction of binary-column predicates that the explained
observation satisfies, such that every dataset row satisfying the rule
receives the same model prediction.  Minimum-predicate rules are an
exact minimal set cover over the rows with the opposite prediction; a
second solver maximizes how many rows a rule covers subject to a cap on
its predicate count.  Both are solved exactly by an in-house
branch-and-bound over bitsets, so no external MIP solver is needed.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .binarize import BinarizationScheme, encode_dataset
from .data import Dataset
from .riskmodel import TwoLayerModel, model_fingerprint, predict_matrix

DEFAULT_MIN_SUPPORT = 10
DEFAULT_FALLBACK_SUPPORT = 5
DEFAULT_TIME_LIMIT = 10.0  # seconds, per solve

OUTLIER_MESSAGE = (
    "the observation is an outlier; there is no rule characterizing it"
)


class RuleError(Exception):
    """Base class for explanation failures."""


class InfeasibleRuleError(RuleError):
    """No consistent rule exists (a twin row has the opposite prediction)."""


class OutlierError(RuleError):
    """Every consistent rule has too little support to be trustworthy."""


class CacheMismatchError(RuleError):
    """The cache on disk was built against a different model or dataset."""


class SolverTimeLimit(RuleError):
    """The time budget ran out before any rule could be produced."""


@dataclass(frozen=True)
class ExplainContext:
    """Immutable universe that rules are checked against.

    The matrix is extended with one complement column per original
    column, so predicates can say both "condition holds" and "condition
    fails".  Predictions are fixed when the context is built: rules
    summarize the model, not the training labels.
    """

    scheme: BinarizationScheme
    bits: np.ndarray  # uint8, N x 2P (original columns then complements)
    predictions: np.ndarray  # int8 model predictions at the decision threshold
    threshold: float
    fingerprint: str

    @property
    def n_rows(self) -> int:
        return self.bits.shape[0]

    @property
    def n_original(self) -> int:
        return self.bits.shape[1] // 2

    @property
    def n_extended(self) -> int:
        return self.bits.shape[1]

    def describe_column(self, ext_index: int) -> str:
        p = self.n_original
        if ext_index < p:
            return self.scheme.columns[ext_index].describe()
        return self.scheme.columns[ext_index - p].describe_complement()

    def label_text(self, label: int) -> str:
        return "high risk" if label == 1 else "low risk"

    def extend_row(self, original_bits: np.ndarray) -> np.ndarray:
        row = np.asarray(original_bits, dtype=np.uint8)
        return np.concatenate([row, 1 - row])


@dataclass(frozen=True)
class Rule:
    """A conjunction of extended-column predicates with a predicted label."""

    columns: tuple[int, ...]  # sorted extended column ids
    label: int
    support: int

    @property
    def sparsity(self) -> int:
        return len(self.columns)

    def predicates(self, ctx: ExplainContext) -> list[str]:
        return [ctx.describe_column(c) for c in self.columns]

    def render(self, ctx: ExplainContext, total_rows: int | None = None) -> str:
        n = ctx.n_rows if total_rows is None else total_rows
        fraction = 100.0 * self.support / n if n else 0.0
        preds = self.predicates(ctx)
        where = " and ".join(preds) if preds else "any values"
        return (
            f"For all {self.support} ({fraction:.1f}%) people where {where}, "
            f"the model predicts {ctx.label_text(self.label)}."
        )


@dataclass(frozen=True)
class SolveReport:
    status: str  # optimal | feasible_timeout | infeasible
    objective: float
    nodes: int
    wall_time: float


@dataclass(frozen=True)
class Query:
    """An observation posed against a context: extended bits plus the
    model's prediction for it."""

    bits: np.ndarray  # uint8, length 2P
    label: int
    row_index: int | None = None  # set when explaining a training row

    def key(self) -> str:
        if self.row_index is not None:
            return f"row:{self.row_index}"
        digest = hashlib.sha256(self.bits.tobytes()).hexdigest()[:24]
        return f"obs:{digest}:{self.label}"


def build_context(
    model: TwoLayerModel,
    dataset: Dataset,
    threshold: float = 0.5,
) -> ExplainContext:
    """Encode the dataset, add complement columns, fix model predictions."""
    matrix = encode_dataset(dataset, model.scheme)
    probs = predict_matrix(model, matrix.bits)
    predictions = (probs >= threshold).astype(np.int8)
    bits = np.concatenate([matrix.bits, 1 - matrix.bits], axis=1)
    h = hashlib.sha256()
    h.update(model_fingerprint(model).encode())
    h.update(np.ascontiguousarray(matrix.bits).tobytes())
    h.update(repr(float(threshold)).encode())
    return ExplainContext(
        scheme=model.scheme,
        bits=bits,
        predictions=predictions,
        threshold=float(threshold),
        fingerprint=h.hexdigest(),
    )


def make_query(ctx: ExplainContext, e: int | np.ndarray, label: int | None = None) -> Query:
    """Build a query from a training-row index or an encoded original row."""
    if isinstance(e, (int, np.integer)):
        i = int(e)
        return Query(bits=ctx.bits[i].copy(), label=int(ctx.predictions[i]), row_index=i)
    if label is None:
        raise ValueError("a prediction label is required for out-of-sample rows")
    original = np.asarray(e, dtype=np.uint8)
    if len(original) == ctx.n_extended:
        ext = original
    elif len(original) == ctx.n_original:
        ext = ctx.extend_row(original)
    else:
        raise ValueError("row length matches neither the original nor extended width")
    return Query(bits=ext, label=int(label), row_index=None)


def rule_support(columns: Sequence[int], ctx: ExplainContext) -> int:
    """Rows satisfying every predicate (an empty rule covers everyone)."""
    if not columns:
        return ctx.n_rows
    sub = ctx.bits[:, list(columns)]
    return int(np.sum(np.all(sub == 1, axis=1)))


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    violations: tuple[int, ...]


def verify_consistency(rule: Rule, ctx: ExplainContext) -> ConsistencyResult:
    """Exhaustively scan for rows that satisfy the rule yet are predicted
    differently; an empty violation list certifies consistency."""
    if rule.columns:
        sub = ctx.bits[:, list(rule.columns)]
        satisfied = np.all(sub == 1, axis=1)
    else:
        satisfied = np.ones(ctx.n_rows, dtype=bool)
    bad = satisfied & (ctx.predictions != rule.label)
    violations = tuple(int(i) for i in np.flatnonzero(bad))
    return ConsistencyResult(consistent=not violations, violations=violations)


def _pack(mask: np.ndarray) -> int:
    """Boolean vector to arbitrary-precision bitset."""
    if len(mask) == 0:
        return 0
    return int.from_bytes(np.packbits(mask).tobytes(), "big")


class _Instance:
    """Shared solver state for one query: relevant columns with their
    cover sets (opposite rows they exclude) and keep sets (same-side
    rows that still satisfy the rule if the column is chosen)."""

    def __init__(self, query: Query, ctx: ExplainContext):
        self.ctx = ctx
        self.query = query
        preds = ctx.predictions
        self.opposite = np.flatnonzero(preds != query.label)
        self.same = np.flatnonzero(preds == query.label)
        self.relevant = [int(c) for c in np.flatnonzero(query.bits == 1)]
        opp_bits = ctx.bits[self.opposite]
        same_bits = ctx.bits[self.same]
        self.cover = {c: _pack(opp_bits[:, c] == 0) for c in self.relevant}
        self.keep = {c: _pack(same_bits[:, c] == 1) for c in self.relevant}
        self.full_cover = _pack(np.ones(len(self.opposite), dtype=bool))
        self.full_keep = _pack(np.ones(len(self.same), dtype=bool))
        self.n_opposite = len(self.opposite)

    def feasible(self) -> bool:
        u = 0
        for c in self.relevant:
            u |= self.cover[c]
        return u == self.full_cover

    def support_of(self, columns: Sequence[int]) -> int:
        kept = self.full_keep
        for c in columns:
            kept &= self.keep[c]
        return kept.bit_count()

    def greedy_cover(self) -> list[int] | None:
        """Deterministic greedy cover used as the incumbent."""
        uncovered = self.full_cover
        chosen: list[int] = []
        available = list(self.relevant)
        while uncovered:
            best_c, best_gain = None, 0
            for c in available:
                gain = (self.cover[c] & uncovered).bit_count()
                if gain > best_gain:  # strict: ties keep the lowest id
                    best_c, best_gain = c, gain
            if best_c is None:
                return None
            chosen.append(best_c)
            uncovered &= ~self.cover[best_c]
            available.remove(best_c)
        return chosen


def min_sparsity_rule(
    e: int | np.ndarray,
    ctx: ExplainContext,
    label: int | None = None,
    time_limit: float = DEFAULT_TIME_LIMIT,
) -> tuple[Rule, SolveReport]:
    """Exact minimum-predicate consistent rule for the observation.

    Branch and bound over the minimal set cover: the greedy cover seeds
    the incumbent, a max-coverage bound prunes, and branching picks the
    column excluding the most still-included opposite rows (include
    branch first, ties to the lowest column id).
    """
    start = time.monotonic()
    query = e if isinstance(e, Query) else make_query(ctx, e, label)
    inst = _Instance(query, ctx)
    if not inst.feasible():
        raise InfeasibleRuleError(
            "no consistent rule exists: a row with identical relevant columns "
            "has the opposite prediction"
        )

    if inst.full_cover == 0:
        rule = Rule(columns=(), label=query.label, support=rule_support((), ctx))
        return rule, SolveReport("optimal", 0.0, 0, time.monotonic() - start)

    # Identical cover sets are interchangeable here; keep the lowest id.
    seen: dict[int, int] = {}
    candidates = []
    for c in inst.relevant:
        cov = inst.cover[c]
        if cov == 0:
            continue
        if cov not in seen:
            seen[cov] = c
            candidates.append(c)
    deadline = start + time_limit

    incumbent = inst.greedy_cover()
    best_size = len(incumbent)
    best_set = list(incumbent)
    nodes = 0
    timed_out = False

    def bound(uncovered: int, avail: list[int]) -> int:
        if not uncovered:
            return 0
        max_gain = 0
        for c in avail:
            g = (inst.cover[c] & uncovered).bit_count()
            if g > max_gain:
                max_gain = g
        if max_gain == 0:
            return 1 << 30
        return -(-uncovered.bit_count() // max_gain)  # ceil division

    def dfs(chosen: list[int], uncovered: int, avail: list[int]) -> None:
        nonlocal best_size, best_set, nodes, timed_out
        if timed_out:
            return
        nodes += 1
        if nodes % 256 == 0 and time.monotonic() > deadline:
            timed_out = True
            return
        if not uncovered:
            if len(chosen) < best_size:
                best_size = len(chosen)
                best_set = list(chosen)
            return
        if len(chosen) + bound(uncovered, avail) >= best_size:
            return
        # branch on the column excluding the most uncovered rows
        best_c, best_gain = None, 0
        for c in avail:
            g = (inst.cover[c] & uncovered).bit_count()
            if g > best_gain:
                best_c, best_gain = c, g
        if best_c is None:
            return
        rest = [c for c in avail if c != best_c]
        chosen.append(best_c)
        dfs(chosen, uncovered & ~inst.cover[best_c], rest)
        chosen.pop()
        dfs(chosen, uncovered, rest)

    dfs([], inst.full_cover, candidates)
    status = "feasible_timeout" if timed_out else "optimal"
    columns = tuple(sorted(best_set))
    rule = Rule(columns=columns, label=query.label, support=rule_support(columns, ctx))
    return rule, SolveReport(status, float(best_size), nodes, time.monotonic() - start)


def max_support_rule(
    e: int | np.ndarray,
    ctx: ExplainContext,
    max_sparsity: int,
    warm_start: Rule | None = None,
    label: int | None = None,
    time_limit: float = DEFAULT_TIME_LIMIT,
) -> tuple[Rule, SolveReport]:
    """Exact maximum-support consistent rule within a predicate cap.

    The objective is lexicographic: support first, then fewer predicates
    (weights 1 and 1/(2P+1), kept in integer arithmetic so comparisons
    are exact).  The warm start, when given, seeds the incumbent.
    """
    start = time.monotonic()
    query = e if isinstance(e, Query) else make_query(ctx, e, label)
    inst = _Instance(query, ctx)
    if not inst.feasible():
        raise InfeasibleRuleError(
            "no consistent rule exists: a row with identical relevant columns "
            "has the opposite prediction"
        )
    deadline = start + time_limit
    scale = ctx.n_extended + 1  # objective = support * scale - sparsity

    # Columns that exclude no opposite row only shrink support; they can
    # never appear in an optimal solution, so restrict to useful ones.
    candidates = [c for c in inst.relevant if inst.cover[c] != 0]

    def objective(columns: Sequence[int]) -> int:
        return inst.support_of(columns) * scale - len(columns)

    best_set: list[int] | None = None
    best_obj = -(1 << 62)
    if inst.full_cover == 0:
        rule = Rule(columns=(), label=query.label, support=rule_support((), ctx))
        return rule, SolveReport("optimal", float(rule.support * scale), 0, time.monotonic() - start)

    if warm_start is not None and verify_consistency(warm_start, ctx).consistent:
        if len(warm_start.columns) <= max_sparsity and all(
            query.bits[c] == 1 for c in warm_start.columns
        ):
            best_set = list(warm_start.columns)
            best_obj = objective(best_set)
    if best_set is None:
        greedy = inst.greedy_cover()
        if greedy is not None and len(greedy) <= max_sparsity:
            best_set = greedy
            best_obj = objective(greedy)

    nodes = 0
    timed_out = False

    def min_extra(uncovered: int, avail: list[int]) -> int:
        if not uncovered:
            return 0
        max_gain = 0
        for c in avail:
            g = (inst.cover[c] & uncovered).bit_count()
            if g > max_gain:
                max_gain = g
        if max_gain == 0:
            return 1 << 30
        return -(-uncovered.bit_count() // max_gain)

    def dfs(chosen: list[int], uncovered: int, kept: int, avail: list[int]) -> None:
        nonlocal best_set, best_obj, nodes, timed_out
        if timed_out:
            return
        nodes += 1
        if nodes % 256 == 0 and time.monotonic() > deadline:
            timed_out = True
            return
        if not uncovered:
            obj = kept.bit_count() * scale - len(chosen)
            if obj > best_obj:
                best_obj = obj
                best_set = list(chosen)
            return  # adding columns past feasibility only lowers the objective
        need = min_extra(uncovered, avail)
        if len(chosen) + need > max_sparsity:
            return
        upper = kept.bit_count() * scale - (len(chosen) + need)
        if upper <= best_obj:
            return
        best_c, best_gain = None, 0
        for c in avail:
            g = (inst.cover[c] & uncovered).bit_count()
            if g > best_gain:
                best_c, best_gain = c, g
        if best_c is None:
            return
        rest = [c for c in avail if c != best_c]
        chosen.append(best_c)
        dfs(chosen, uncovered & ~inst.cover[best_c], kept & inst.keep[best_c], rest)
        chosen.pop()
        dfs(chosen, uncovered, kept, rest)

    dfs([], inst.full_cover, inst.full_keep, candidates)
    if best_set is None:
        raise InfeasibleRuleError("no consistent rule within the sparsity cap")
    status = "feasible_timeout" if timed_out else "optimal"
    columns = tuple(sorted(best_set))
    rule = Rule(columns=columns, label=query.label, support=rule_support(columns, ctx))
    return rule, SolveReport(status, float(best_obj), nodes, time.monotonic() - start)


def opt_consistent_rule(
    e: int | np.ndarray,
    ctx: ExplainContext,
    cache: "RuleCache | None" = None,
    min_support: int = DEFAULT_MIN_SUPPORT,
    fallback_support: int = DEFAULT_FALLBACK_SUPPORT,
    time_limit: float = DEFAULT_TIME_LIMIT,
    label: int | None = None,
) -> Rule:
    """Sparsest trustworthy rule for an observation.

    A cached rule that is relevant, consistent, and well-supported is
    returned without solving.  Otherwise: solve for minimum sparsity; if
    its support clears ``min_support`` return it; else maximize support
    at the optimal sparsity and at +1 and +2, reusing each solution as
    the next warm start.  The ladder is then re-read at the fallback
    threshold.  If nothing clears it, the observation is an outlier.
    """
    if time_limit <= 0:
        raise SolverTimeLimit("no time budget left for rule solving")
    deadline = time.monotonic() + time_limit
    query = e if isinstance(e, Query) else make_query(ctx, e, label)
    if cache is not None:
        hit = cache.lookup(query, ctx, min_support)
        if hit is not None:
            return hit

    def remaining() -> float:
        return max(0.05, deadline - time.monotonic())

    base, _ = min_sparsity_rule(query, ctx, time_limit=remaining())
    if base.support > min_support:
        return base
    ladder = [base]
    warm = base
    for extra in (0, 1, 2):
        rule, _ = max_support_rule(
            query, ctx, base.sparsity + extra, warm_start=warm, time_limit=remaining()
        )
        ladder.append(rule)
        if rule.support > warm.support:
            warm = rule
    for threshold in (min_support, fallback_support):
        passing = [r for r in ladder if r.support > threshold]
        if passing:
            return min(passing, key=lambda r: (r.sparsity, -r.support))
    raise OutlierError(OUTLIER_MESSAGE)


# ---------------------------------------------------------------------------
# Rule cache
# ---------------------------------------------------------------------------

CACHE_VERSION = 1


class RuleCache:
    """Append-only store of precomputed rules, keyed to one context.

    The file is JSON lines: a header carrying the context fingerprint,
    then one record per observation.  Every cached rule is re-verified
    against the live context before it is ever returned.
    """

    def __init__(self, path: str | Path, context_fingerprint: str):
        self.path = Path(path)
        self.context_fingerprint = context_fingerprint
        self.records: dict[str, list[Rule]] = {}
        self.failures: dict[str, str] = {}

    # -- persistence --------------------------------------------------

    @classmethod
    def open(cls, path: str | Path, ctx: ExplainContext, verify: bool = True) -> "RuleCache":
        path = Path(path)
        cache = cls(path, ctx.fingerprint)
        if not path.exists():
            return cache
        with path.open(encoding="utf-8") as fh:
            header_line = fh.readline()
            if not header_line.strip():
                return cache
            header = json.loads(header_line)
            if header.get("cache_version") != CACHE_VERSION:
                raise CacheMismatchError(f"unsupported cache version in {path}")
            if header.get("context_fingerprint") != ctx.fingerprint:
                raise CacheMismatchError(
                    "cache was built for a different model/dataset/threshold"
                )
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                key = rec["key"]
                if "error" in rec:
                    cache.failures[key] = rec["error"]
                    continue
                rules = [
                    Rule(
                        columns=tuple(int(c) for c in r["columns"]),
                        label=int(r["label"]),
                        support=int(r["support"]),
                    )
                    for r in rec["rules"]
                ]
                cache.records[key] = rules
        if verify:
            for key, rules in cache.records.items():
                for rule in rules:
                    if not verify_consistency(rule, ctx).consistent:
                        raise CacheMismatchError(
                            f"cached rule for {key} is no longer consistent"
                        )
        return cache

    def _write_header_if_new(self) -> None:
        if not self.path.exists() or self.path.stat().st_size == 0:
            with self.path.open("w", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {
                            "cache_version": CACHE_VERSION,
                            "context_fingerprint": self.context_fingerprint,
                        }
                    )
                    + "\n"
                )

    def append(self, key: str, rules: list[Rule]) -> None:
        self._write_header_if_new()
        self.records[key] = rules
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {
                        "key": key,
                        "rules": [
                            {
                                "columns": list(r.columns),
                                "label": r.label,
                                "support": r.support,
                                "sparsity": r.sparsity,
                            }
                            for r in rules
                        ],
                    }
                )
                + "\n"
            )

    def append_failure(self, key: str, message: str) -> None:
        self._write_header_if_new()
        self.failures[key] = message
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"key": key, "error": message}) + "\n")

    # -- queries ------------------------------------------------------

    def lookup(self, query: Query, ctx: ExplainContext, min_support: int) -> Rule | None:
        """Sparsest stored rule that is relevant to the query, label-matched,
        sufficiently supported, and still consistent."""
        best: Rule | None = None
        for rules in self.records.values():
            for rule in rules:
                if rule.label != query.label or rule.support <= min_support:
                    continue
                if any(query.bits[c] != 1 for c in rule.columns):
                    continue
                if best is None or (rule.sparsity, -rule.support) < (
                    best.sparsity,
                    -best.support,
                ):
                    best = rule
        if best is not None and not verify_consistency(best, ctx).consistent:
            raise CacheMismatchError("cached rule is no longer consistent")
        return best

    @property
    def n_entries(self) -> int:
        return len(self.records)

    def mean_sparsity(self) -> float:
        sizes = [r.sparsity for rules in self.records.values() for r in rules]
        return float(np.mean(sizes)) if sizes else 0.0


def build_rule_cache(
    ctx: ExplainContext,
    path: str | Path,
    row_indices: Sequence[int] | None = None,
    min_support: int = DEFAULT_MIN_SUPPORT,
    time_limit: float = DEFAULT_TIME_LIMIT,
    progress: bool = False,
) -> RuleCache:
    """Precompute rules for training rows: the sparsest rule plus the
    best-support rules at the optimal predicate count, +1, and +2.

    Resumable: rows already in the file are skipped on a rerun.
    Per-row solver timeouts are recorded and the row is skipped.
    """
    path = Path(path)
    if path.exists():
        cache = RuleCache.open(path, ctx, verify=False)
    else:
        cache = RuleCache(path, ctx.fingerprint)
    rows = range(ctx.n_rows) if row_indices is None else row_indices
    for i in rows:
        query = make_query(ctx, int(i))
        key = query.key()
        if key in cache.records or key in cache.failures:
            continue
        try:
            base, report = min_sparsity_rule(query, ctx, time_limit=time_limit)
            rules = [base]
            warm = base
            for extra in (0, 1, 2):
                rule, rep = max_support_rule(
                    query,
                    ctx,
                    base.sparsity + extra,
                    warm_start=warm,
                    time_limit=time_limit,
                )
                if rep.status == "feasible_timeout":
                    raise TimeoutError(f"solver timeout at sparsity +{extra}")
                if rule.columns not in [r.columns for r in rules]:
                    rules.append(rule)
                if rule.support > warm.support:
                    warm = rule
            cache.append(key, rules)
        except InfeasibleRuleError as exc:
            cache.append_failure(key, f"infeasible: {exc}")
        except TimeoutError as exc:
            cache.append_failure(key, f"timeout: {exc}")
        if progress and (int(i) + 1) % 50 == 0:
            print(f"cached rules for {int(i) + 1} rows")
    return cache
