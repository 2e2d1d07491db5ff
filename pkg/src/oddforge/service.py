"""HTTP facade for the human audit loop.

A read-only view over the store plus the deterministic renderer, with exactly
one mutating endpoint (POST verdicts). On-demand transition frames let the
auditor binary-search the lambda where a model starts failing; responses are
bit-stable and served with content-hash ETags, so repeated requests hit the
cache (client- and server-side).
"""
from __future__ import annotations

import hashlib
import json
import threading

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import pipeline
from .config import Config
from .errors import AdapterError, OddforgeError, StoreError
from .scenes import image_png_bytes, load_image_png, load_mask_png
from .segeval import confusion_accumulate, iou_from_matrix, predict
from .store import ReportStore, Verdict
from .style import interpolate_assignment
from .rendering import RenderParams, render
from .sweeps import condition_assignment


class ApiError(Exception):
    """Error carried to the client as {status, code, message}."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class VerdictBody(BaseModel):
    sample_id: str
    verdict: str
    reason: str = ""
    author: str = "ui"


class _RunState:
    """Per-run lazily loaded artifacts shared across requests."""

    def __init__(self, ctx: pipeline.RunContext):
        self.ctx = ctx
        self.catalog = pipeline.load_catalog_snapshot(ctx)
        self.baseline = pipeline.load_baseline(ctx)
        self.odd = pipeline.load_odd_spec(ctx.config, ctx.registry)
        self.suite = ctx.store.load_report(ctx.run_id, pipeline.SUITE_REPORT)


def create_app(config: Config) -> FastAPI:
    app = FastAPI(title="oddforge audit service")
    store = ReportStore(config.store)
    registry = config.load_registry()
    render_cache: dict[tuple, tuple[bytes, dict[str, str]]] = {}
    cache_lock = threading.Lock()
    render_slots = threading.Semaphore(max(1, config.parallelism))
    run_states: dict[str, _RunState] = {}
    adapter_fingerprint: dict[str, str] = {}

    def run_state(run_id: str) -> _RunState:
        if run_id not in store.list_runs():
            raise ApiError(404, "unknown-run", f"no run {run_id!r}")
        if run_id not in run_states:
            try:
                ctx = pipeline.open_run(config)
            except OddforgeError as exc:
                raise ApiError(500, "config-error", str(exc)) from exc
            if ctx.run_id != run_id:
                # the service can still browse stored reports of other runs,
                # but renders need the live dataset/config of this run
                ctx = pipeline.RunContext(config=ctx.config, registry=ctx.registry,
                                          store=ctx.store, scenes=ctx.scenes,
                                          run_id=run_id)
            try:
                run_states[run_id] = _RunState(ctx)
            except OddforgeError as exc:
                raise ApiError(404, "missing-artifacts", str(exc)) from exc
            payload = {"adapter": config.adapter.to_json(),
                       "baseline": run_states[run_id].baseline.to_json()}
            adapter_fingerprint[run_id] = hashlib.sha256(
                json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]
        return run_states[run_id]

    def suite_variants(state: _RunState) -> list[dict]:
        return state.suite["variants"]

    def effective_for(run_id: str) -> dict[str, str]:
        return store.effective_verdict_values(run_id)

    # --- error shape ---------------------------------------------------------

    @app.exception_handler(ApiError)
    async def handle_api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={
            "status": exc.status, "code": exc.code, "message": exc.message,
        })

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_error(_req: Request, exc: StarletteHTTPException):
        return JSONResponse(status_code=exc.status_code, content={
            "status": exc.status_code, "code": "http-error", "message": str(exc.detail),
        })

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={
            "status": 422, "code": "invalid-body", "message": str(exc.errors()),
        })

    # --- listings --------------------------------------------------------------

    @app.get("/api/registry")
    def registry_listing():
        return registry.to_json()

    @app.get("/api/runs")
    def list_runs():
        runs = []
        for run_id in store.list_runs():
            manifest = store.read_manifest(run_id)
            runs.append({
                "run_id": run_id,
                "created_at": manifest.get("created_at"),
                "updated_at": manifest.get("updated_at"),
                "has_suite": store.has_report(run_id, pipeline.SUITE_REPORT),
                "has_compliance": store.has_report(run_id, pipeline.COMPLIANCE_REPORT),
            })
        return runs

    @app.get("/api/runs/{run_id}/scenes")
    def list_scenes(run_id: str):
        state = run_state(run_id)
        effective = effective_for(run_id)
        scenes: dict[str, list[dict]] = {}
        for variant in suite_variants(state):
            report = variant["report"]
            scenes.setdefault(variant["scene_id"], []).append({
                "sample_id": variant["sample_id"],
                "condition": variant["condition"],
                "mean_iou": report["mean_iou"] if report else None,
                "error": variant["error"],
                "verdict": effective.get(variant["sample_id"], "accepted"),
                "audited": variant["sample_id"] in effective,
                "image_url": (f"/api/runs/{run_id}/scenes/{variant['scene_id']}"
                              f"/variants/{variant['condition']}.png"),
            })
        return [
            {"scene_id": scene_id, "variants": items}
            for scene_id, items in sorted(scenes.items())
        ]

    @app.get("/api/runs/{run_id}/scenes/{scene_id}/variants")
    def list_variants(run_id: str, scene_id: str):
        state = run_state(run_id)
        effective = effective_for(run_id)
        items = []
        for variant in suite_variants(state):
            if variant["scene_id"] != scene_id:
                continue
            items.append({
                **{k: variant[k] for k in
                   ("sample_id", "condition", "report", "error", "warnings")},
                "verdict": effective.get(variant["sample_id"], "accepted"),
                "audited": variant["sample_id"] in effective,
            })
        if not items:
            raise ApiError(404, "unknown-scene",
                           f"run {run_id} has no scene {scene_id!r}")
        return {"scene_id": scene_id, "conditions": state.suite["conditions"],
                "variants": items}

    # --- images -----------------------------------------------------------------

    def png_response(data: bytes, headers: dict[str, str] | None = None) -> Response:
        etag = hashlib.sha256(data).hexdigest()
        base = {"ETag": f'"{etag}"',
                "Cache-Control": "public, max-age=31536000, immutable"}
        if headers:
            base.update(headers)
        return Response(content=data, media_type="image/png", headers=base)

    @app.get("/api/runs/{run_id}/scenes/{scene_id}/variants/{condition}.png")
    def variant_png(run_id: str, scene_id: str, condition: str):
        run_state(run_id)
        path = store.render_path(run_id, pipeline.render_name(scene_id, condition))
        if not path.exists():
            raise ApiError(404, "unknown-variant",
                           f"no stored render for {scene_id}/{condition}")
        return png_response(path.read_bytes())

    @app.get("/api/runs/{run_id}/scenes/{scene_id}/render")
    def render_frame(run_id: str, scene_id: str, request: Request,
                     to: str, focus: str | None = None):
        params = request.query_params
        frm = params.get("from", "original")
        lam_raw = params.get("lambda")
        if lam_raw is None:
            raise ApiError(400, "bad-lambda", "query parameter lambda is required")
        try:
            lam_value = float(lam_raw)
        except (TypeError, ValueError):
            raise ApiError(400, "bad-lambda", f"lambda {lam_raw!r} is not a number")
        if not 0.0 <= lam_value <= 1.0:
            raise ApiError(400, "bad-lambda", f"lambda {lam_value} outside [0,1]")
        state = run_state(run_id)
        try:
            scene = state.ctx.scene(scene_id)
        except OddforgeError:
            raise ApiError(404, "unknown-scene", f"no scene {scene_id!r}")
        try:
            cond_a = pipeline.resolve_condition(state.odd, frm)
            cond_b = pipeline.resolve_condition(state.odd, to)
        except OddforgeError as exc:
            raise ApiError(404, "unknown-condition", str(exc))
        focus_id = None
        if focus is not None:
            try:
                focus_id = state.ctx.registry.resolve(focus)
            except KeyError as exc:
                raise ApiError(404, "unknown-category", str(exc))

        key = (run_id, scene_id, cond_a.name, cond_b.name, repr(lam_value),
               focus_id, adapter_fingerprint[run_id])
        with cache_lock:
            cached = render_cache.get(key)
        if cached is not None:
            return png_response(cached[0], cached[1])

        if not render_slots.acquire(timeout=1.0):
            return JSONResponse(status_code=503, headers={"Retry-After": "1"},
                                content={"status": 503, "code": "computing",
                                         "message": "model busy, retry shortly"})
        try:
            assignment_a, _ = condition_assignment(scene, state.catalog, cond_a)
            assignment_b, _ = condition_assignment(scene, state.catalog, cond_b)
            styles = interpolate_assignment(assignment_a, assignment_b, lam_value)
            frame = render(scene.mask, scene.regions, styles,
                           RenderParams(noise_seed=config.noise_seed))
            try:
                pred = predict(config.adapter, state.baseline, frame,
                               state.ctx.registry)
            except AdapterError as exc:
                raise ApiError(502, "adapter-error", str(exc)) from exc
            report = iou_from_matrix(
                confusion_accumulate(scene.mask, pred, state.ctx.registry))
            headers = {"X-Mean-Iou": json.dumps(report.mean_iou),
                       "X-Lambda": repr(lam_value)}
            if focus_id is not None:
                headers["X-Focus-Iou"] = json.dumps(report.iou(focus_id))
                headers["X-Focus-Category"] = state.ctx.registry.name_of(focus_id)
            data = image_png_bytes(frame)
        finally:
            render_slots.release()
        with cache_lock:
            render_cache.setdefault(key, (data, headers))
        return png_response(data, headers)

    @app.get("/api/runs/{run_id}/scenes/{scene_id}/overlay")
    def overlay(run_id: str, scene_id: str, variant: str):
        state = run_state(run_id)
        name = pipeline.render_name(scene_id, variant)
        image_path = store.render_path(run_id, name)
        pred_path = store.render_path(run_id, name + "__pred")
        if not image_path.exists() or not pred_path.exists():
            raise ApiError(404, "unknown-variant",
                           f"no prediction stored for {scene_id}/{variant}")
        image = load_image_png(image_path)
        pred = load_mask_png(pred_path)
        colors = np.asarray(state.ctx.registry.colors, dtype=np.float64) / 255.0
        colored = colors[pred]
        blended = 0.5 * image + 0.5 * colored
        return png_response(image_png_bytes(blended))

    # --- verdicts & compliance -------------------------------------------------

    @app.post("/api/runs/{run_id}/verdicts")
    def post_verdict(run_id: str, body: VerdictBody):
        state = run_state(run_id)
        if body.verdict not in ("accepted", "rejected"):
            raise ApiError(422, "invalid-verdict",
                           f"verdict must be accepted/rejected, got {body.verdict!r}")
        if body.verdict == "rejected" and not body.reason:
            raise ApiError(422, "missing-reason", "a rejection needs a reason")
        before = pipeline.compute_compliance(state.ctx, state.odd)
        try:
            recorded = store.record_verdict(Verdict(
                run_id=run_id, sample_id=body.sample_id, verdict=body.verdict,
                reason=body.reason, author=body.author,
            ))
        except StoreError as exc:
            raise ApiError(404, "unknown-sample", str(exc)) from exc
        after = pipeline.compute_compliance(state.ctx, state.odd)
        # every cell of the sample's condition was recomputed without (or with)
        # it; report those, plus cells that vanished into insufficient evidence
        sample_condition = next(
            (v["condition"] for v in suite_variants(state)
             if v["sample_id"] == body.sample_id), None)
        affected = [
            {"condition": cell.condition, "category_id": cell.category_id,
             "iou": cell.iou, "threshold": cell.threshold, "status": cell.status}
            for cell in after.cells if cell.condition == sample_condition
        ]
        covered = {(c["condition"], c["category_id"]) for c in affected}
        for cell in before.cells:
            if cell.condition == sample_condition and \
                    (cell.condition, cell.category_id) not in covered:
                affected.append({"condition": cell.condition,
                                 "category_id": cell.category_id,
                                 "iou": None, "threshold": cell.threshold,
                                 "status": "insufficient-evidence"})
        return {
            "effective": {"sample_id": recorded.sample_id,
                          "verdict": recorded.verdict, "reason": recorded.reason,
                          "author": recorded.author},
            "affected_cells": affected,
            "compliance": after.to_json(),
        }

    @app.get("/api/runs/{run_id}/sweeps")
    def list_sweeps(run_id: str):
        run_dir = store.run_dir(run_id)
        if run_id not in store.list_runs():
            raise ApiError(404, "unknown-run", f"no run {run_id!r}")
        sweeps = []
        for path in sorted((run_dir / "reports").glob("sweep_*.json")):
            payload = json.loads(path.read_text("utf-8"))
            sweeps.append({"scene_id": payload["scene_id"],
                           "from": payload["from"], "to": payload["to"],
                           "focus_category": payload["focus_category"]})
        return sweeps

    @app.get("/api/runs/{run_id}/sweeps/{scene_id}/{frm}/{to}")
    def sweep_report(run_id: str, scene_id: str, frm: str, to: str):
        if run_id not in store.list_runs():
            raise ApiError(404, "unknown-run", f"no run {run_id!r}")
        try:
            return store.load_report(run_id,
                                     pipeline.sweep_report_name(scene_id, frm, to))
        except StoreError as exc:
            raise ApiError(404, "unknown-sweep", str(exc)) from exc

    @app.get("/api/runs/{run_id}/compliance")
    def compliance(run_id: str):
        state = run_state(run_id)
        try:
            report = pipeline.compute_compliance(state.ctx, state.odd)
        except OddforgeError as exc:
            raise ApiError(404, "no-compliance", str(exc)) from exc
        return report.to_json()

    ui_dist = config.ui_dist
    if ui_dist is not None and ui_dist.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app
