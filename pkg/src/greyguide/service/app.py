"""FastAPI service wrapping the core package for multi-client use.

Exposes the series transforms, grey-model fitting, guidance extraction,
metrics, and checkpoint inference. Batch workflows (training, sweeps, splits)
stay on the CLI; this surface serves the per-record operations that other
processes want on demand. Run with:

    uvicorn greyguide.service:app
"""

from __future__ import annotations

import os

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..grey import (
    FitError,
    LAMBDA_TOL,
    fit_fsgm,
    guidance_vector,
    particular_coeffs,
)
from ..hts import HTS, accumulate, append_features, estimate_period, squeeze
from ..metrics import compute_metrics
from ..model import load_checkpoint, model_from_checkpoint, predict_proba
from ..pipeline import Scaler, guidance_map
from . import schemas

_checkpoint_cache: dict = {}


def _load_cached_checkpoint(path: str):
    real = os.path.realpath(path)
    try:
        mtime = os.path.getmtime(real)
    except OSError as exc:
        raise HTTPException(status_code=404, detail=f"checkpoint not found: {exc}") from exc
    key = (real, mtime)
    if key not in _checkpoint_cache:
        _checkpoint_cache.clear()
        ckpt = load_checkpoint(real)
        _checkpoint_cache[key] = (ckpt, model_from_checkpoint(ckpt))
    return _checkpoint_cache[key]


def create_app() -> FastAPI:
    app = FastAPI(title="greyguide", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/hts/squeeze", response_model=schemas.SqueezeResponse)
    def squeeze_endpoint(req: schemas.SqueezeRequest):
        try:
            series = squeeze(np.asarray(req.embedding, dtype=np.float64))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.SqueezeResponse(values=series.values.tolist())

    @app.post("/hts/accumulate", response_model=schemas.AccumulateResponse)
    def accumulate_endpoint(req: schemas.SeriesRequest):
        series = accumulate(HTS(np.asarray(req.values, dtype=np.float64)))
        return schemas.AccumulateResponse(values=series.values.tolist())

    @app.post("/hts/period", response_model=schemas.PeriodResponse)
    def period_endpoint(req: schemas.SeriesRequest):
        est = estimate_period(HTS(np.asarray(req.values, dtype=np.float64)))
        return schemas.PeriodResponse(crossings=est.crossings, omega=est.omega)

    @app.post("/grey/fit", response_model=schemas.FitResponse)
    def fit_endpoint(req: schemas.FitRequest):
        series = HTS(np.asarray(req.values, dtype=np.float64))
        try:
            params = fit_fsgm(series, req.order, omega=req.omega)
            x1_first = float(accumulate(series).values[0])
            tr = particular_coeffs(params, x1_first, on_small_lambda="zero-a0")
        except (FitError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.FitResponse(
            lam=params.lam, a0=params.a0, an=params.an.tolist(), bn=params.bn.tolist(),
            omega=params.omega, order=params.order, eta=tr.eta, a0_coef=tr.a0_coef,
            response_an=tr.an.tolist(), response_bn=tr.bn.tolist(),
            degenerate=abs(params.lam) < LAMBDA_TOL,
        )

    @app.post("/grey/guidance", response_model=schemas.GuidanceResponse)
    def guidance_endpoint(req: schemas.GuidanceRequest):
        if (req.values is None) == (req.embedding is None):
            raise HTTPException(status_code=422,
                                detail="provide exactly one of 'values' or 'embedding'")
        try:
            if req.embedding is not None:
                series = squeeze(np.asarray(req.embedding, dtype=np.float64))
            else:
                series = HTS(np.asarray(req.values, dtype=np.float64))
            values, degenerate = guidance_vector(series, order=req.order, model=req.model)
        except (FitError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.GuidanceResponse(
            gg=values.tolist(), width=len(values), degenerate=degenerate
        )

    @app.post("/metrics")
    def metrics_endpoint(req: schemas.MetricsRequest):
        try:
            return compute_metrics(req.predictions, req.labels, req.num_classes).to_dict()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/classify", response_model=schemas.ClassifyResponse)
    def classify_endpoint(req: schemas.ClassifyRequest):
        ckpt, model = _load_cached_checkpoint(req.checkpoint_path)
        embedding = np.asarray(req.embedding, dtype=np.float64)
        pipeline_info = ckpt.get("pipeline") or {}
        try:
            record = _AdhocRecord(embedding)
            gg = guidance_map([record], pipeline_info.get("guidance"))
            matrix = embedding
            if gg is not None:
                matrix = append_features(embedding, gg[record.id][0])
            if pipeline_info.get("scaler"):
                matrix = Scaler.from_dict(pipeline_info["scaler"]).apply(matrix)
        except (FitError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        if matrix.shape[1] != model.config.d_in:
            raise HTTPException(
                status_code=422,
                detail=f"feature width {matrix.shape[1]} != model width {model.config.d_in}",
            )
        probs = predict_proba(model, matrix)
        return schemas.ClassifyResponse(
            theme=model.theme,
            probabilities=probs.tolist(),
            level=int(np.argmax(probs)) + 1,
        )

    return app


class _AdhocRecord:
    """Minimal record shim so ad-hoc embeddings reuse the batch guidance path."""

    def __init__(self, embedding: np.ndarray):
        self.id = "adhoc"
        self.embedding = embedding


app = create_app()
