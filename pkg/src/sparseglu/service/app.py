"""FastAPI service wrapping the core package.

Endpoints cover the compute surface (mask rules, FFN cost model, model
forward on an uploaded GSPT container, analysis statistics). File-based
experiment orchestration lives in the CLI.
"""

import base64
import binascii

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import stats
from ..container import load_container
from ..errors import SparsegluError
from ..ffn import ActivationSite, CostMode, ffn_mac_count
from ..harness import SweepCurve, SweepPoint
from ..model import ModelManifest, SparsityRecorder, TinyLM
from ..sparsify import RuleKind, SparsifyRule, induced_sparsity
from . import schemas as s


def _rule(spec: s.RuleSpec) -> SparsifyRule:
    return SparsifyRule(RuleKind(spec.kind), p=spec.p, k=spec.k)


def create_app() -> FastAPI:
    app = FastAPI(title="sparseglu", version="0.1.0")

    @app.exception_handler(SparsegluError)
    async def _domain_error(request, exc: SparsegluError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sparsify", response_model=s.SparsifyResponse)
    def sparsify_endpoint(req: s.SparsifyRequest):
        mask = _rule(req.rule).mask(np.asarray(req.values, dtype=np.float64))
        return s.SparsifyResponse(
            keep=mask.keep.astype(int).tolist(),
            kept_indices=mask.kept_indices().tolist(),
            induced_sparsity=induced_sparsity(mask),
        )

    @app.post("/flops", response_model=s.FlopsResponse)
    def flops_endpoint(req: s.FlopsRequest):
        cost = ffn_mac_count(
            req.h, req.d, ActivationSite(req.site), CostMode(req.mode), req.sparsity
        )
        return s.FlopsResponse(
            h=req.h,
            d=req.d,
            site=req.site,
            mode=req.mode,
            sparsity=req.sparsity,
            macs=cost.macs,
            dense_macs=cost.dense_macs,
            saving=cost.saving,
            elementwise_ops=cost.elementwise_ops,
            activation_ops=cost.activation_ops,
            weight_bytes=cost.weight_bytes,
            dense_weight_bytes=cost.dense_weight_bytes,
        )

    @app.post("/forward", response_model=s.ForwardResponse)
    def forward_endpoint(req: s.ForwardRequest):
        try:
            raw = base64.b64decode(req.container_b64, validate=True)
        except (binascii.Error, ValueError):
            raise HTTPException(status_code=422, detail="container_b64 is not valid base64")
        manifest = ModelManifest.from_json(req.manifest.model_dump_json())
        model = TinyLM(manifest, load_container(raw))
        sparsify = None
        recorder = None
        if req.site is not None:
            if req.rule is None:
                raise HTTPException(status_code=422, detail="site given without rule")
            sparsify = (ActivationSite(req.site), _rule(req.rule))
            recorder = SparsityRecorder(manifest.n_layers)
        logits = model.forward_logits(req.tokens, sparsify=sparsify, recorder=recorder)
        return s.ForwardResponse(
            logits=logits.astype(float).tolist(),
            avg_induced_sparsity=recorder.average() if recorder else None,
        )

    @app.post("/stats/critical", response_model=s.CriticalResponse)
    def critical_endpoint(req: s.CriticalRequest):
        curve = SweepCurve(
            site=ActivationSite(req.site),
            rule_kind=RuleKind(req.rule),
            points=tuple(
                SweepPoint(pt.p, pt.induced_sparsity, pt.raw_metric, pt.normalized_metric)
                for pt in req.points
            ),
            dense_metric=req.dense_metric,
        )
        crit = stats.critical_sparsity(curve, req.retention)
        return s.CriticalResponse(
            value=crit.value,
            retention_threshold=crit.retention_threshold,
            source_induced_sparsity=crit.source_point.induced_sparsity,
            source_normalized_metric=crit.source_point.normalized_metric,
        )

    @app.post("/stats/kde", response_model=s.KdeResponse)
    def kde_endpoint(req: s.KdeRequest):
        xs = np.asarray(req.values, dtype=np.float64)
        bw = req.bandwidth if req.bandwidth is not None else stats.silverman_bandwidth(xs)
        grid = stats.default_kde_grid(xs, bw, req.grid_points)
        density = stats.gaussian_kde(xs, bw, grid)
        return s.KdeResponse(bandwidth=bw, grid=grid.tolist(), density=density.tolist())

    @app.post("/stats/trend", response_model=s.TrendResponse)
    def trend_endpoint(req: s.TrendRequest):
        x = np.log10(np.asarray(req.parameter_counts, dtype=np.float64))
        fit = stats.ols_trend(x, req.critical_sparsities)
        return s.TrendResponse(
            slope=fit.slope,
            intercept=fit.intercept,
            rss=fit.residual_sum_of_squares,
            n=fit.n_points,
        )

    return app


app = create_app()
