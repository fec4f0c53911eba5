"""Command-line entry point: train, eval, explain, cache, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .data import (
    DataError,
    SchemaError,
    apply_class_weights,
    load_dataset,
    load_schema,
    stratified_folds,
)
from .evaluation import METRICS, ModelConfig, evaluate
from .riskmodel import (
    ModelFormatError,
    load_model,
    model_fingerprint,
    predict,
    save_model,
    train_model,
)
from .rules import CacheMismatchError, RuleError, build_context, build_rule_cache

# Exit codes: 0 ok, 1 runtime error, 2 config/consistency error, 64 usage.
click.exceptions.UsageError.exit_code = 64

CONFIG_ERRORS = (SchemaError, DataError, ModelFormatError, CacheMismatchError,
                 FileNotFoundError)


def _fail(exc: Exception) -> "None":
    code = 2 if isinstance(exc, CONFIG_ERRORS) else 1
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


@click.group()
@click.version_option(package_name="creditlens")
def main():
    """Transparent credit-risk scoring and explanation toolkit."""


@main.command()
@click.option("--schema", "schema_path", required=True, type=click.Path(),
              help="Schema sidecar file (YAML).")
@click.option("--data", "data_path", required=True, type=click.Path(),
              help="Training data (CSV with header).")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Where to write the trained model (YAML).")
@click.option("--max-thresholds", default=5, show_default=True,
              help="Cap on learned thresholds per feature.")
@click.option("--l2", "lam", default=1e-3, show_default=True,
              help="L2 penalty weight on interval/category coefficients.")
@click.option("--l2-literal", is_flag=True,
              help="Use an unscaled L2 penalty (weight 1) instead of --l2.")
@click.option("--fine-tune-epochs", default=50, show_default=True,
              help="Joint fine-tuning epochs after layer-wise training (0 skips).")
@click.option("--weight-pos", default=1.0, show_default=True,
              help="Training weight for positive-label rows.")
@click.option("--weight-neg", default=1.0, show_default=True,
              help="Training weight for negative-label rows.")
def train(schema_path, data_path, out_path, max_thresholds, lam, l2_literal,
          fine_tune_epochs, weight_pos, weight_neg):
    """Train a model and write it to --out."""
    try:
        schema = load_schema(schema_path)
        dataset = load_dataset(data_path, schema)
        dataset = apply_class_weights(dataset, weight_pos, weight_neg)
        if l2_literal:
            lam = 1.0
        model, log = train_model(
            dataset,
            max_thresholds=max_thresholds,
            lam=lam,
            fine_tune_epochs=fine_tune_epochs,
        )
        for tag, info in log.subscale_fits:
            status = "converged" if info.converged else "NOT converged"
            click.echo(
                f"subscale {tag}: objective {info.objective:.6f} "
                f"after {info.iterations} iterations ({status})"
            )
        second = log.second_layer_fit
        click.echo(
            f"second layer: objective {second.objective:.6f} "
            f"after {second.iterations} iterations"
        )
        if fine_tune_epochs > 0 and log.fine_tune_trace:
            trace = log.fine_tune_trace
            click.echo(
                f"fine-tune: {len(trace) - 1} accepted steps, "
                f"objective {trace[0]:.6f} -> {trace[-1]:.6f}"
            )
        else:
            click.echo("fine-tune skipped")
        save_model(model, out_path)
        click.echo(f"model written to {out_path} (fingerprint {model_fingerprint(model)[:16]})")
    except Exception as exc:  # noqa: BLE001 - single exit point maps error classes
        _fail(exc)


@main.command(name="eval")
@click.option("--schema", "schema_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--k", default=10, show_default=True, help="Fold count.")
@click.option("--seed", default=7, show_default=True, help="Fold assignment seed.")
@click.option("--max-thresholds", default=5, show_default=True)
@click.option("--l2", "lam", default=1e-3, show_default=True)
@click.option("--fine-tune-epochs", default=50, show_default=True)
@click.option("--weight-pos", default=1.0, show_default=True)
@click.option("--weight-neg", default=1.0, show_default=True)
@click.option("--fixed-scheme", is_flag=True,
              help="Learn thresholds once on the full data instead of per fold.")
@click.option("--format", "fmt", type=click.Choice(["text", "csv"]), default="text",
              show_default=True)
def eval_cmd(schema_path, data_path, k, seed, max_thresholds, lam, fine_tune_epochs,
             weight_pos, weight_neg, fixed_scheme, fmt):
    """Cross-validated metrics: accuracy, AUC, average precision, recall@0.5."""
    try:
        schema = load_schema(schema_path)
        dataset = load_dataset(data_path, schema)
        folds = stratified_folds(dataset, k, seed)
        config = ModelConfig(
            max_thresholds=max_thresholds,
            lam=lam,
            fine_tune_epochs=fine_tune_epochs,
            weight_pos=weight_pos,
            weight_neg=weight_neg,
            fixed_scheme=fixed_scheme,
        )
        report = evaluate(dataset, folds, config)
        if fmt == "csv":
            click.echo(report.table())
        else:
            click.echo(f"{k}-fold stratified cross validation (seed {seed})")
            for m in METRICS:
                click.echo(f"  {m:<18} {report.mean(m):.3f} +/- {report.std(m):.3f}")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path(),
              help="Training data used as the explanation universe.")
@click.option("--cache", "cache_path", type=click.Path(), default=None,
              help="Rule cache to consult (optional).")
@click.option("--row", type=int, default=None, help="Explain this training row.")
@click.option("--input", "input_path", type=click.Path(), default=None,
              help="JSON file with a 'features' mapping to explain.")
@click.option("--threshold", default=0.5, show_default=True,
              help="Decision threshold for the model's high-risk label.")
@click.option("--min-support", default=10, show_default=True)
@click.option("--time-limit", default=7.0, show_default=True,
              help="Total solver budget per explanation, seconds.")
@click.option("--n-cases", default=5, show_default=True)
@click.option("--protective", is_flag=True,
              help="Also list active conditions that reduce risk.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
def explain(model_path, data_path, cache_path, row, input_path, threshold,
            min_support, time_limit, n_cases, protective, fmt):
    """Breakdown, risk factors, consistent rule, and similar cases."""
    from .factors import important_factors
    from .payloads import factors_payload
    from .service import AppState, ServiceConfig, explain_observation

    try:
        if (row is None) == (input_path is None):
            raise click.UsageError("provide exactly one of --row or --input")
        config = ServiceConfig(
            model_path=model_path,
            data_path=data_path,
            cache_path=cache_path,
            threshold=threshold,
            min_support=min_support,
            time_limit=time_limit,
            n_cases=n_cases,
        )
        state = AppState.load(config)
        if row is not None:
            if not 0 <= row < state.dataset.n_rows:
                raise DataError(f"row {row} out of range")
            x = state.dataset.row(row)
        else:
            doc = json.loads(Path(input_path).read_text(encoding="utf-8"))
            x = doc.get("features", doc)
        payload = explain_observation(state, x)
        if protective:
            payload["protective"] = factors_payload(
                important_factors(state.model, x, protective=True)
            )
        if fmt == "json":
            click.echo(json.dumps(payload, indent=2))
            return
        _render_text_explanation(payload, protective)
    except click.UsageError:
        raise
    except RuleError as exc:
        _fail(exc)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


def _render_text_explanation(payload: dict, protective: bool) -> None:
    pred = payload["prediction"]
    click.echo(f"final probability: {pred['final_probability']:.3f}")
    click.echo(f"final score:       {pred['final_score']:.3f} (bias {pred['bias']:.3f})")
    click.echo("")
    click.echo("subscales:")
    for s in pred["subscales"]:
        click.echo(
            f"  {s['name']:<18} prob {s['probability']:.3f}  weight {s['weight']:.3f}"
            f"  contribution {s['contribution']:.3f}"
        )
    click.echo("")
    click.echo("most important contributing factors:")
    rank_text = {1: "most important", 2: "second most important", 3: "third most important"}
    for i, f in enumerate(payload["factors"], start=1):
        sub = rank_text.get(f["subscale_rank"], f"rank-{f['subscale_rank']}")
        click.echo(f"  {i}. {f['condition']} (from the {sub} subscale, {f['subscale']})")
    if protective and payload.get("protective"):
        click.echo("protective factors:")
        for f in payload["protective"]:
            click.echo(f"  - {f['condition']} ({f['points']:.3f} points, {f['subscale']})")
    click.echo("")
    if payload["rule"] is not None:
        click.echo(payload["rule"]["rendered"])
    if payload.get("rule_warning"):
        click.echo(f"warning: {payload['rule_warning']}")
    if payload["cases"]:
        click.echo("")
        click.echo("similar cases:")
        header = ["id", "prediction", "label", "similarity"]
        click.echo("  " + "  ".join(f"{h:<10}" for h in header))
        for c in payload["cases"]:
            click.echo(
                f"  {c['id']:<10}  {c['risk_prediction']:<10}  {c['true_label']:<10}"
                f"  {c['similarity']:<10}"
            )


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--data", "data_path", required=True, type=click.Path())
@click.option("--out", "cache_path", required=True, type=click.Path(),
              help="Cache file (JSON lines); reruns resume where they stopped.")
@click.option("--rows", default=None, type=int,
              help="Only cache the first N rows (default: all).")
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--time-limit", default=10.0, show_default=True,
              help="Per-solve time limit, seconds.")
def cache(model_path, data_path, cache_path, rows, threshold, time_limit):
    """Precompute rules for training rows into a persistent cache."""
    try:
        model = load_model(model_path)
        dataset = load_dataset(data_path, model.schema)
        ctx = build_context(model, dataset, threshold)
        indices = range(dataset.n_rows if rows is None else min(rows, dataset.n_rows))
        store = build_rule_cache(
            ctx, cache_path, row_indices=indices, time_limit=time_limit, progress=True
        )
        click.echo(
            f"cache at {cache_path}: {store.n_entries} rows, "
            f"mean sparsity {store.mean_sparsity():.2f}, "
            f"{len(store.failures)} failures"
        )
    except Exception as exc:  # noqa: BLE001
        _fail(exc)


@main.command()
@click.option("--model", "model_path", envvar="MODEL_PATH", required=True,
              type=click.Path())
@click.option("--data", "data_path", envvar="DATA_PATH", required=True,
              type=click.Path())
@click.option("--cache", "cache_path", envvar="CACHE_PATH", type=click.Path(), default=None)
@click.option("--ui-dir", envvar="UI_DIR", type=click.Path(), default=None,
              help="Static assets served under /ui/.")
@click.option("--bind", envvar="BIND_ADDR", default="127.0.0.1:8701", show_default=True,
              help="host:port to listen on.")
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--min-support", envvar="MIN_SUPPORT", default=10, show_default=True)
@click.option("--time-limit", envvar="SOLVER_TIME_LIMIT_SECS", default=7.0,
              show_default=True)
def serve(model_path, data_path, cache_path, ui_dir, bind, threshold, min_support,
          time_limit):
    """Serve predictions and explanations over HTTP."""
    import uvicorn

    from .service import AppState, ServiceConfig, create_app

    try:
        config = ServiceConfig(
            model_path=model_path,
            data_path=data_path,
            cache_path=cache_path,
            ui_dir=ui_dir,
            threshold=threshold,
            min_support=min_support,
            time_limit=time_limit,
        )
        state = AppState.load(config)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
        return
    host, _, port = bind.rpartition(":")
    click.echo(f"serving model {state.fingerprint[:16]} on {bind}")
    uvicorn.run(create_app(state), host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
