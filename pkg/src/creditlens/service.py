"""HTTP API over one loaded model, explanation context, and rule cache.

The whole application state is immutable after startup, so any number of
concurrent handlers can share it; responses are pure functions of
(state, payload).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .cases import similar_cases
from .data import DataError, Dataset, load_dataset
from .factors import important_factors
from .payloads import (
    breakdown_payload,
    cases_payload,
    factors_payload,
    model_payload,
    rule_payload,
)
from .riskmodel import TwoLayerModel, load_model, model_fingerprint, predict
from .rules import (
    DEFAULT_FALLBACK_SUPPORT,
    DEFAULT_MIN_SUPPORT,
    ExplainContext,
    InfeasibleRuleError,
    OutlierError,
    RuleCache,
    SolverTimeLimit,
    build_context,
    make_query,
    opt_consistent_rule,
)


@dataclass(frozen=True)
class ServiceConfig:
    model_path: str
    data_path: str
    cache_path: str | None = None
    ui_dir: str | None = None
    threshold: float = 0.5
    min_support: int = DEFAULT_MIN_SUPPORT
    fallback_support: int = DEFAULT_FALLBACK_SUPPORT
    time_limit: float = 7.0
    n_cases: int = 5
    n_subscales: int = 2
    n_factors_each: int = 2
    cors_origins: tuple[str, ...] = ("*",)

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        env = os.environ
        values = dict(
            model_path=env.get("MODEL_PATH", ""),
            data_path=env.get("DATA_PATH", ""),
            cache_path=env.get("CACHE_PATH") or None,
            ui_dir=env.get("UI_DIR") or None,
            time_limit=float(env.get("SOLVER_TIME_LIMIT_SECS", 7.0)),
            min_support=int(env.get("MIN_SUPPORT", DEFAULT_MIN_SUPPORT)),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class AppState:
    """Everything a handler needs, derived from one model fingerprint."""

    config: ServiceConfig
    model: TwoLayerModel
    dataset: Dataset
    context: ExplainContext
    cache: RuleCache | None
    fingerprint: str

    @classmethod
    def load(cls, config: ServiceConfig) -> "AppState":
        model = load_model(config.model_path)
        schema = model.schema
        dataset = load_dataset(config.data_path, schema)
        context = build_context(model, dataset, config.threshold)
        cache = None
        if config.cache_path and Path(config.cache_path).exists():
            # raises CacheMismatchError when built against another model
            cache = RuleCache.open(config.cache_path, context)
        return cls(
            config=config,
            model=model,
            dataset=dataset,
            context=context,
            cache=cache,
            fingerprint=model_fingerprint(model),
        )


def _parse_observation(payload, schema) -> tuple[dict | None, JSONResponse | None]:
    if not isinstance(payload, dict) or not isinstance(payload.get("features"), dict):
        return None, JSONResponse(
            status_code=400, content={"error": "payload must carry a 'features' mapping"}
        )
    features = payload["features"]
    known = {f.name for f in schema.features}
    unknown = sorted(set(features) - known)
    missing = sorted(known - set(features))
    if unknown:
        return None, JSONResponse(
            status_code=422, content={"error": f"unknown features: {unknown}"}
        )
    if missing:
        return None, JSONResponse(
            status_code=422, content={"error": f"missing features: {missing}"}
        )
    for spec in schema.features:
        if spec.kind == "numeric":
            try:
                float(features[spec.name])
            except (TypeError, ValueError):
                return None, JSONResponse(
                    status_code=422,
                    content={"error": f"feature {spec.name!r}: not a number"},
                )
    return features, None


def explain_observation(state: AppState, x: dict, options: dict | None = None) -> dict:
    """Factors, rule, and similar cases for one observation.

    The outlier condition surfaces as a structured warning while the
    other sections are still returned.
    """
    options = options or {}
    model = state.model
    ctx = state.context
    breakdown = predict(model, x)
    label = 1 if breakdown.final_probability >= ctx.threshold else 0
    factors = important_factors(
        model,
        breakdown,
        n_subscales=int(options.get("n_subscales", state.config.n_subscales)),
        n_factors_each=int(options.get("n_factors_each", state.config.n_factors_each)),
    )
    query = make_query(ctx, _original_bits(breakdown), label=label)
    rule = None
    warning = None
    try:
        rule = opt_consistent_rule(
            query,
            ctx,
            cache=state.cache,
            min_support=int(options.get("min_support", state.config.min_support)),
            fallback_support=int(
                options.get("fallback_support", state.config.fallback_support)
            ),
            time_limit=float(options.get("time_limit", state.config.time_limit)),
        )
    except OutlierError as exc:
        warning = str(exc)
    except InfeasibleRuleError as exc:
        warning = f"no consistent rule exists: {exc}"
    cases = []
    if rule is not None:
        display = []
        for p in [*(f.condition.split(" ")[0] for f in factors)]:
            if p not in display:
                display.append(p)
        for c in rule.columns:
            name = ctx.describe_column(c).split(" ")[0]
            if name not in display:
                display.append(name)
        cases = similar_cases(
            query,
            rule,
            ctx,
            state.dataset,
            k=int(options.get("n_cases", state.config.n_cases)),
            display_features=display,
        )
    return {
        "prediction": breakdown_payload(model, x, breakdown),
        "factors": factors_payload(factors),
        "rule": rule_payload(rule, ctx) if rule is not None else None,
        "rule_warning": warning,
        "cases": cases_payload(cases, ctx),
    }


def _original_bits(breakdown):
    return np.asarray(breakdown.encoded_bits, dtype=np.uint8)


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="creditlens", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(state.config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.lens = state

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model_fingerprint": state.fingerprint}

    @app.get("/version")
    def version():
        return {
            "version": __version__,
            "model_fingerprint": state.fingerprint,
            "cache_entries": state.cache.n_entries if state.cache else 0,
        }

    @app.get("/v1/model")
    def model_view():
        return model_payload(state.model, state.context.threshold)

    @app.post("/v1/predict")
    async def predict_endpoint(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse(status_code=400, content={"error": "invalid JSON"})
        x, err = _parse_observation(payload, state.model.schema)
        if err is not None:
            return err
        breakdown = predict(state.model, x)
        return breakdown_payload(state.model, x, breakdown)

    @app.post("/v1/explain")
    async def explain_endpoint(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse(status_code=400, content={"error": "invalid JSON"})
        x, err = _parse_observation(payload, state.model.schema)
        if err is not None:
            return err
        options = payload.get("options") or {}
        try:
            return explain_observation(state, x, options)
        except SolverTimeLimit as exc:
            breakdown = predict(state.model, x)
            factors = important_factors(state.model, breakdown)
            return JSONResponse(
                status_code=504,
                content={
                    "error": f"solver time limit: {exc}",
                    "prediction": breakdown_payload(state.model, x, breakdown),
                    "factors": factors_payload(factors),
                    "rule": None,
                    "cases": [],
                },
            )

    if state.config.ui_dir and Path(state.config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=state.config.ui_dir, html=True), name="ui")

    return app
