"""HTTP service exposing scenarios, tiles, probes, footprints, and jobs.

Every error response uses one body shape: {"code", "message", "detail"}
with detail optional. Mutations are compare-and-swap on the stored
revision, surfaced as 409 on conflict. Optimizations run on a small
worker pool and are polled through /jobs/{job_id}.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import __version__
from ._kernels import BACKEND
from .errors import (
    CorruptDocumentError,
    EmptyFileError,
    GlowmapError,
    MalformedHeaderError,
    NoSourcesError,
    NotAFeatureCollectionError,
    OutOfFrameError,
    StaleRevisionError,
)
from .field import field_at, hotspots, render_grid, tile_png
from .geo import GeoPoint
from .footprint import KERNEL_KINDS, IlluminanceKernel, footprint_report
from .light import intensity_to_sqm, normalized_brightness
from .optimize import OptimizationSpec, solve
from .scenario_io import (
    ScenarioStore,
    import_sources_csv,
    import_sources_geojson,
    scenario_from_dict,
    scenario_to_dict,
    source_from_dict,
)

JOB_STATES = ("queued", "running", "done", "failed")


class ApiError(Exception):
    """Carries an HTTP status and the uniform error body."""

    def __init__(self, status: int, code: str, message: str, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def _error_response(status: int, code: str, message: str, detail=None) -> JSONResponse:
    body = {"code": code, "message": message}
    if detail is not None:
        body["detail"] = detail
    return JSONResponse(body, status_code=status)


def create_app(store_root: "str | Path", jobs: int = 2) -> FastAPI:
    """Build the application around one scenario store directory."""
    store = ScenarioStore(store_root)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        app.state.executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="glowmap", version=__version__, lifespan=lifespan)
    app.state.executor = ThreadPoolExecutor(max_workers=jobs)
    app.state.jobs = {}
    app.state.jobs_lock = threading.Lock()
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # ------------------------------------------------------------- errors

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message, exc.detail)

    @app.exception_handler(StaleRevisionError)
    async def handle_stale(request: Request, exc: StaleRevisionError):
        return _error_response(409, "stale_revision", str(exc))

    @app.exception_handler(FileNotFoundError)
    async def handle_missing(request: Request, exc: FileNotFoundError):
        return _error_response(404, "not_found", str(exc))

    @app.exception_handler(CorruptDocumentError)
    async def handle_corrupt(request: Request, exc: CorruptDocumentError):
        return _error_response(500, "corrupt_document", str(exc))

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": [str(p) for p in err.get("loc", ())], "msg": str(err.get("msg", ""))}
            for err in exc.errors()
        ]
        return _error_response(422, "validation_error", "invalid request", detail)

    @app.exception_handler(StarletteHTTPException)
    async def handle_http(request: Request, exc: StarletteHTTPException):
        codes = {404: "not_found", 405: "method_not_allowed"}
        return _error_response(
            exc.status_code, codes.get(exc.status_code, "http_error"), str(exc.detail)
        )

    # ------------------------------------------------------------ helpers

    def load_or_404(scenario_id: str):
        try:
            return store.load(scenario_id)
        except FileNotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from exc

    # ------------------------------------------------------------- routes

    @app.get("/")
    def health():
        return {"name": "glowmap", "version": __version__, "backend": BACKEND}

    @app.get("/scenarios")
    def list_scenarios():
        out = []
        for sid in store.list_ids():
            _, revision = store.load(sid)
            out.append({"scenario_id": sid, "revision": revision})
        return out

    @app.post("/scenarios", status_code=201)
    def create_scenario(doc: dict):
        try:
            scenario = scenario_from_dict(doc)
        except (ValueError, TypeError, GlowmapError) as exc:
            raise ApiError(400, "invalid_scenario", str(exc)) from exc
        if store.exists(scenario.scenario_id):
            raise ApiError(
                409, "already_exists", f"scenario {scenario.scenario_id!r} already exists"
            )
        revision = store.save(scenario, expected_revision=0)
        return {"scenario_id": scenario.scenario_id, "revision": revision}

    @app.get("/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str):
        scenario, revision = load_or_404(scenario_id)
        return {"revision": revision, "scenario": scenario_to_dict(scenario)}

    @app.delete("/scenarios/{scenario_id}", status_code=204)
    def delete_scenario(scenario_id: str):
        try:
            store.delete(scenario_id)
        except FileNotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from exc
        return Response(status_code=204)

    @app.put("/scenarios/{scenario_id}/sources")
    def put_sources(scenario_id: str, body: dict):
        scenario, _ = load_or_404(scenario_id)
        if "revision" not in body or "sources" not in body:
            raise ApiError(400, "invalid_body", "body needs revision and sources")
        try:
            expected = int(body["revision"])
            new_sources = tuple(source_from_dict(row) for row in body["sources"])
            updated = scenario.with_sources(new_sources)
        except (ValueError, TypeError, GlowmapError) as exc:
            raise ApiError(400, "invalid_sources", str(exc)) from exc
        revision = store.save(updated, expected_revision=expected)
        return {"scenario_id": scenario_id, "revision": revision}

    @app.post("/scenarios/{scenario_id}/import")
    async def import_sources(
        scenario_id: str,
        request: Request,
        format: str = "csv",
        default_profile: int = 4,
        expected_revision: "int | None" = None,
    ):
        scenario, current = load_or_404(scenario_id)
        if format not in ("csv", "geojson"):
            raise ApiError(422, "bad_format", f"format must be csv or geojson, got {format!r}")
        data = await request.body()
        existing = {s.source_id for s in scenario.sources}
        try:
            if format == "csv":
                report = import_sources_csv(data, default_profile, existing_ids=existing)
            else:
                report = import_sources_geojson(data, default_profile, existing_ids=existing)
        except (EmptyFileError, MalformedHeaderError, NotAFeatureCollectionError, ValueError) as exc:
            raise ApiError(400, "bad_import", str(exc)) from exc
        except GlowmapError as exc:
            raise ApiError(422, "bad_import_params", str(exc)) from exc
        try:
            updated = scenario.with_sources(scenario.sources + report.accepted)
        except (ValueError, GlowmapError) as exc:
            raise ApiError(400, "invalid_sources", str(exc)) from exc
        revision = store.save(
            updated, expected_revision=current if expected_revision is None else expected_revision
        )
        return {
            "scenario_id": scenario_id,
            "revision": revision,
            "accepted": len(report.accepted),
            "rejected": [[line, reason] for line, reason in report.rejected],
            "profile_counts": {str(k): v for k, v in report.profile_counts.items()},
        }

    @app.get("/scenarios/{scenario_id}/value")
    def probe_value(scenario_id: str, lat: float, lon: float):
        scenario, _ = load_or_404(scenario_id)
        try:
            intensity = field_at(scenario, GeoPoint(lat, lon))
        except NoSourcesError:
            intensity = 0.0
        except OutOfFrameError as exc:
            raise ApiError(422, "out_of_frame", str(exc)) from exc
        except ValueError as exc:
            raise ApiError(422, "validation_error", str(exc)) from exc
        sqm = intensity_to_sqm(intensity, scenario.i0_max)
        return {
            "intensity": intensity,
            "sqm": sqm,
            "normalized": normalized_brightness(sqm),
        }

    @app.get("/scenarios/{scenario_id}/tiles/{z}/{x}/{y}.png")
    def get_tile(scenario_id: str, z: int, x: int, y: int, request: Request):
        scenario, revision = load_or_404(scenario_id)
        etag = f'"{scenario_id}-{revision}-{z}-{x}-{y}"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        try:
            png = tile_png(scenario, z, x, y)
        except ValueError as exc:
            raise ApiError(422, "bad_tile_address", str(exc)) from exc
        return Response(
            content=png,
            media_type="image/png",
            headers={"ETag": etag, "Cache-Control": "private, max-age=3600"},
        )

    @app.get("/scenarios/{scenario_id}/footprint")
    def get_footprint(
        scenario_id: str,
        area: str,
        kernel: str = "attenuation",
        cell_size_m: float = 1.0,
        mount_height_m: float = 10.0,
    ):
        scenario, _ = load_or_404(scenario_id)
        if kernel not in KERNEL_KINDS:
            raise ApiError(422, "bad_kernel", f"kernel must be one of {KERNEL_KINDS}")
        if area not in scenario.protected_areas:
            raise ApiError(404, "unknown_area", f"no protected area named {area!r}")
        if cell_size_m <= 0 or mount_height_m <= 0:
            raise ApiError(422, "validation_error", "cell_size_m and mount_height_m must be positive")
        report = footprint_report(
            scenario,
            area,
            IlluminanceKernel(kind=kernel, mount_height_m=mount_height_m),
            cell_size_m=cell_size_m,
        )
        return {
            "area": area,
            "area_total": report.area_total,
            "cell_size_m": report.cell_size_m,
            "kernel": report.kernel_kind,
            "per_source": [
                {"source_id": sid, "footprint": value} for sid, value in report.ranked
            ],
        }

    @app.get("/scenarios/{scenario_id}/hotspots")
    def get_hotspots(scenario_id: str, threshold: float):
        scenario, _ = load_or_404(scenario_id)
        if not 16.0 <= threshold <= 22.0:
            raise ApiError(422, "bad_threshold", f"threshold must be in [16, 22], got {threshold}")
        grid = render_grid(scenario)
        regions = hotspots(grid, threshold, i0_max=scenario.i0_max)
        return {
            "threshold": threshold,
            "regions": [
                {
                    "cell_count": r.cell_count,
                    "centroid": [r.centroid.lat_deg, r.centroid.lon_deg],
                    "cells": list(r.cells),
                }
                for r in regions
            ],
        }

    @app.post("/scenarios/{scenario_id}/optimize", status_code=202)
    def submit_optimize(scenario_id: str, body: dict):
        scenario, revision = load_or_404(scenario_id)
        try:
            spec = OptimizationSpec.from_dict(body)
        except (ValueError, TypeError, KeyError, GlowmapError) as exc:
            raise ApiError(422, "invalid_spec", str(exc)) from exc
        if isinstance(spec.target, str) and spec.target not in scenario.protected_areas:
            raise ApiError(422, "unknown_area", f"no protected area named {spec.target!r}")
        if not scenario.sources:
            raise ApiError(422, "no_sources", "scenario has no sources to optimize")
        job_id = uuid.uuid4().hex[:12]
        job = {
            "job_id": job_id,
            "scenario_id": scenario_id,
            "revision": revision,
            "mode": spec.mode,
            "status": "queued",
            "result": None,
            "error": None,
        }
        with app.state.jobs_lock:
            app.state.jobs[job_id] = job

        def run():
            with app.state.jobs_lock:
                job["status"] = "running"
            try:
                result = solve(scenario, spec)
                payload = result.to_dict()
                payload["scenario_after_sources"] = scenario_to_dict(
                    result.scenario_after(scenario)
                )["sources"]
                with app.state.jobs_lock:
                    job["status"] = "done"
                    job["result"] = payload
            except (GlowmapError, ValueError) as exc:
                with app.state.jobs_lock:
                    job["status"] = "failed"
                    job["error"] = str(exc)

        app.state.executor.submit(run)
        return {"job_id": job_id, "status": "queued"}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        with app.state.jobs_lock:
            job = app.state.jobs.get(job_id)
            if job is None:
                raise ApiError(404, "not_found", f"no job {job_id!r}")
            return dict(job)

    return app
