"""HTTP service exposing the library operations as stateless endpoints.

Every endpoint is a pure computation on its request body, so the app
holds no state and any number of workers can serve it.  Error mapping:
malformed model/prior/grid text gives 400, numerical failures give 500,
and request-shape problems give FastAPI's usual 422.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..divergence import kl_divergence, sample_kl
from ..errors import LsklError, ParseError
from ..families import Dataset, default_params, get_family, parse_model, sample
from ..minkl import OptimizerOptions, independence_check, min_kl
from ..priors import (
    ParameterPrior,
    model_prior_pair,
    parse_prior,
    parse_setting_grid,
    point_prior,
)
from ..selection import berk_consistency_sim, default_grid_prior, posterior_odds
from . import schemas


def _wire(v):
    """Make a value JSON-safe: non-finite floats become strings."""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if v == math.inf:
            return "inf"
        if v == -math.inf:
            return "-inf"
        return v
    if isinstance(v, dict):
        return {str(k): _wire(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_wire(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return _wire(v.item())
    return v


def _kl_payload(kv) -> dict:
    return {
        "value": _wire(kv.value),
        "method": kv.method,
        "error_bound": _wire(kv.error_bound),
        "n_used": kv.n_used,
        "support_violation": kv.support_violation,
    }


def _priors_payload(pair) -> dict:
    return {
        "mass1": _wire(pair.mass1),
        "mass2": _wire(pair.mass2),
        "p1": _wire(pair.p1),
        "p2": _wire(pair.p2),
        "loss1": _wire(pair.loss1),
        "loss2": _wire(pair.loss2),
        "loss_source": pair.loss_source,
    }


def _prior_or_default(text: str | None, family) -> ParameterPrior:
    if text:
        return parse_prior(text)
    return point_prior(default_params(family), text="point(defaults)")


def create_app() -> FastAPI:
    app = FastAPI(title="lskl", version=__version__)

    @app.exception_handler(ParseError)
    async def _parse_error(request: Request, exc: ParseError):
        return JSONResponse(status_code=400, content={"error": "parse", "detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": "invalid", "detail": str(exc)})

    @app.exception_handler(LsklError)
    async def _numeric_error(request: Request, exc: LsklError):
        return JSONResponse(
            status_code=500, content={"error": "numeric", "detail": str(exc)}
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/kl", response_model=schemas.KLResponse)
    def kl(req: schemas.KLRequest):
        f1 = parse_model(req.from_model)
        f2 = parse_model(req.to_model)
        kv = kl_divergence(f1, f2, method=req.method, tol=req.tol, n=req.n, seed=req.seed)
        return _kl_payload(kv)

    @app.post("/sample-kl", response_model=schemas.KLResponse)
    def sample_kl_endpoint(req: schemas.SampleKLRequest):
        f1 = parse_model(req.from_model)
        f2 = parse_model(req.to_model)
        kv = sample_kl(Dataset(req.data, provenance="request"), f1, f2)
        return _kl_payload(kv)

    @app.post("/minkl", response_model=schemas.MinKLResponse)
    def minkl(req: schemas.MinKLRequest):
        f1 = parse_model(req.from_model)
        target = get_family(req.target)
        opts = OptimizerOptions(
            final_tol=req.tol, search_tol=max(req.tol * 100.0, 1e-7)
        )
        result = min_kl(f1, target, method=req.method, opts=opts, n=req.n, seed=req.seed)
        return {
            "argmin": _wire(result.argmin),
            "value": _kl_payload(result.value),
            "method": result.method,
            "converged": result.converged,
            "diagnostics": _wire(result.diagnostics),
        }

    @app.post("/independence", response_model=schemas.IndependenceResponse)
    def independence(req: schemas.IndependenceRequest):
        source = get_family(req.source)
        target = get_family(req.target)
        grid = parse_setting_grid(req.grid)
        report = independence_check(source, target, grid, tol=req.tol)
        return {
            "source": report.source,
            "target": report.target,
            "grid": list(report.grid),
            "values": _wire(list(report.values)),
            "spread": _wire(report.spread),
            "tolerance": report.tolerance,
            "pass": report.passed,
            "methods": list(report.methods),
        }

    @app.post("/priors", response_model=schemas.ModelPriorsOut)
    def priors(req: schemas.PriorsRequest):
        f1 = get_family(req.source1)
        f2 = get_family(req.source2)
        pair = model_prior_pair(
            f1,
            _prior_or_default(req.prior1, f1),
            f2,
            _prior_or_default(req.prior2, f2),
            loss_source=req.loss_source,
        )
        return _priors_payload(pair)

    @app.post("/select", response_model=schemas.SelectResponse)
    def select(req: schemas.SelectRequest):
        f1 = get_family(req.m1)
        f2 = get_family(req.m2)
        if (req.data is None) == (req.truth is None):
            raise ValueError("provide exactly one of data or truth")
        if req.data is not None:
            data = Dataset(req.data, provenance="request")
        else:
            data = sample(parse_model(req.truth), req.n, req.seed)
        prior1 = parse_prior(req.prior1) if req.prior1 else default_grid_prior(f1, data)
        prior2 = parse_prior(req.prior2) if req.prior2 else default_grid_prior(f2, data)
        # the projection loss is constant in the source parameters for all
        # supported families, so a point evaluation equals the expectation
        pair = model_prior_pair(
            f1,
            point_prior(default_params(f1)),
            f2,
            point_prior(default_params(f2)),
            loss_source=req.loss_source,
        )
        odds = posterior_odds(data, (f1, prior1), (f2, prior2), pair)
        return {
            "log_marginal1": _wire(odds.log_marginal1),
            "log_marginal2": _wire(odds.log_marginal2),
            "log_bayes_factor": _wire(odds.log_bayes_factor),
            "log_prior_odds": _wire(odds.log_prior_odds),
            "log_posterior_odds": _wire(odds.log_posterior_odds),
            "bayes_factor": _wire(odds.bayes_factor),
            "prior_odds": _wire(odds.prior_odds),
            "posterior_odds": _wire(odds.posterior_odds),
            "model_priors": _priors_payload(pair),
            "n_used": len(data),
        }

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        truth = parse_model(req.truth)
        f1 = get_family(req.m1)
        f2 = get_family(req.m2)
        pair = model_prior_pair(
            f1,
            point_prior(default_params(f1)),
            f2,
            point_prior(default_params(f2)),
            loss_source=req.loss_source,
        )
        prior1 = parse_prior(req.prior1) if req.prior1 else None
        prior2 = parse_prior(req.prior2) if req.prior2 else None
        report = berk_consistency_sim(
            truth,
            (f1, prior1),
            (f2, prior2),
            n_grid=req.n_grid,
            reps=req.reps,
            seed=req.seed,
            model_priors=pair,
        )
        return {
            "truth": report.truth,
            "family1": report.family1,
            "family2": report.family2,
            "nearest": report.nearest,
            "n_grid": list(report.n_grid),
            "reps": report.reps,
            "seed": report.seed,
            "model_priors": _priors_payload(report.model_priors),
            "medians": [{"n": n, "median": m} for n, m in report.medians],
            "rows": [
                {"n": n, "rep": rep, "posterior_prob": prob}
                for n, rep, prob in report.rows
            ],
        }

    return app
