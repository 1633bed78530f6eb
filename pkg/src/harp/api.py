"""HTTP/JSON surface over the whole platform.

Every module error maps to exactly one machine code (see errors.py);
error bodies always carry {status, code, message, detail}. Long-running
work (imports, training) answers 202 and finishes in a background task;
the job record and the model registry entry are the pollable resources.
JSON everywhere, except manifest upload (TOML body) and exports.
"""

from __future__ import annotations

import logging
import os
from typing import Literal

import numpy as np
from fastapi import BackgroundTasks, Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel, Field
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import classify as clf
from .align import resample
from .compose import QueryFilter, WindowingSpec, query, recording_to_csv
from .core import CANONICAL_RATE_HZ, LabelEntry
from .errors import HarpError, InvalidFilterError, ModelNotReadyError
from .importer import apply_mappings, run_import
from .labels import MAPPING_STATUSES
from .store import Store

log = logging.getLogger(__name__)

TOKEN_ENV = "HAR_API_TOKEN"


def _error_body(status: int, code: str, message: str, detail: dict | None = None) -> dict:
    return {"status": status, "code": code, "message": message, "detail": detail or {}}


class DriverSummary(BaseModel):
    driver_id: str
    layout: str
    unit: str
    rate: str
    includes_gravity: bool
    sensor_kind: str
    column_roles: list[str]
    label_source: str | None


def _driver_summary(m) -> dict:
    return DriverSummary(
        driver_id=m.driver_id,
        layout=m.layout,
        unit=str(m.unit),
        rate="from_timestamp_column" if m.rate_hz is None else f"fixed:{m.rate_hz:g}",
        includes_gravity=m.includes_gravity,
        sensor_kind=m.sensor_kind,
        column_roles=list(m.file_syntax.column_roles),
        label_source=m.label_source.kind if m.label_source else None,
    ).model_dump()


class ImportRequest(BaseModel):
    driver_id: str
    dataset_id: str
    root: str
    policy: Literal["keep_gravity", "strip_gravity"] = "keep_gravity"


class DictionaryAdd(BaseModel):
    name: str
    kind: Literal["state", "transition", "fall"] = "state"
    description: str = ""
    aliases: list[str] = Field(default_factory=list)


class DecisionRequest(BaseModel):
    action: Literal["accept", "reject", "manual"]
    canonical: str | None = None
    who: str = "api"


class ApplyRequest(BaseModel):
    dataset_id: str


class FilterBody(BaseModel):
    labels: list[str] | None = None
    dataset_ids: list[str] | None = None
    subject_ids: list[str] | None = None
    sensor_kind: Literal["accelerometer", "gyroscope"] | None = None
    min_duration_s: float | None = None
    include_unlabeled: bool = False
    select_all: bool = False

    def to_filter(self) -> QueryFilter:
        return QueryFilter(
            labels=frozenset(self.labels) if self.labels is not None else None,
            dataset_ids=frozenset(self.dataset_ids) if self.dataset_ids is not None else None,
            subject_ids=frozenset(self.subject_ids) if self.subject_ids is not None else None,
            sensor_kind=self.sensor_kind,
            min_duration_s=self.min_duration_s,
            include_unlabeled=self.include_unlabeled,
            select_all=self.select_all,
        )


class WindowingBody(BaseModel):
    window_s: float = 2.0
    overlap_fraction: float = 0.5
    majority_threshold: float = 0.5

    def to_spec(self) -> WindowingSpec:
        return WindowingSpec(self.window_s, self.overlap_fraction, self.majority_threshold)


class TrainRequest(BaseModel):
    filter: FilterBody
    windowing: WindowingBody = Field(default_factory=WindowingBody)
    kind: Literal["nearest_centroid", "knn"] = "nearest_centroid"
    k: int = 5


class ClassifyRequest(BaseModel):
    model_id: str
    rate_hz: float = CANONICAL_RATE_HZ
    samples: list[tuple[float, float, float]]
    windowing: WindowingBody = Field(default_factory=WindowingBody)


def _model_summary(payload: dict) -> dict:
    return {
        "model_id": payload.get("model_id"),
        "status": payload.get("status", "ready"),
        "kind": payload.get("kind"),
        "labels": payload.get("labels", []),
        "created_at": payload.get("metadata", {}).get("created_at"),
    }


def create_app(store: Store, token: str | None = None, ui_dir: str | None = None) -> FastAPI:
    """Build the service around one store; ``token`` gates every request."""
    if token is None:
        token = os.environ.get(TOKEN_ENV) or None
    app = FastAPI(title="harp", version="0.1.0", docs_url=None, redoc_url=None)

    async def check_auth(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HarpTokenError("missing or wrong bearer token")

    class HarpTokenError(HarpError):
        code = "unauthorized"
        http_status = 401

    @app.exception_handler(HarpError)
    async def harp_error_handler(request: Request, exc: HarpError):
        return JSONResponse(
            status_code=exc.http_status,
            content=_error_body(exc.http_status, exc.code, exc.message, exc.detail),
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content=_error_body(422, "invalid_request", "request body or parameters failed validation",
                                {"errors": [str(e.get("msg", e)) for e in exc.errors()][:5]}),
        )

    @app.exception_handler(StarletteHTTPException)
    async def http_error_handler(request: Request, exc: StarletteHTTPException):
        code = {404: "not_found", 405: "method_not_allowed", 415: "unsupported_media_type"}.get(
            exc.status_code, "http_error"
        )
        return JSONResponse(status_code=exc.status_code,
                            content=_error_body(exc.status_code, code, str(exc.detail)))

    auth = Depends(check_auth)

    @app.get("/", dependencies=[auth])
    async def service_info():
        return {"service": "harp", "version": "0.1.0", "recordings": len(store.entries())}

    # -- drivers ---------------------------------------------------------

    @app.post("/drivers", status_code=201, dependencies=[auth])
    async def register_driver(request: Request):
        content_type = request.headers.get("content-type", "")
        if "toml" not in content_type:
            raise StarletteHTTPException(415, "manifest body must be sent as application/toml")
        text = (await request.body()).decode("utf-8")
        manifest = store.register_driver(text)
        return _driver_summary(manifest)

    @app.get("/drivers", dependencies=[auth])
    async def list_drivers():
        return [_driver_summary(m) for m in store.list_drivers()]

    # -- imports ---------------------------------------------------------

    @app.post("/imports", status_code=202, dependencies=[auth])
    async def start_import(body: ImportRequest, background: BackgroundTasks):
        job = store.create_job(body.driver_id, body.dataset_id, body.root, body.policy)

        def task():
            try:
                run_import(store, job.job_id)
            except Exception:
                log.exception("import job %s crashed", job.job_id)

        background.add_task(task)
        return {"job_id": job.job_id, "state": job.state}

    @app.get("/imports/{job_id}", dependencies=[auth])
    async def job_status(job_id: str):
        return store.get_job(job_id).to_json()

    # -- labels ------------------------------------------------------------

    @app.get("/labels/dictionary", dependencies=[auth])
    async def get_dictionary():
        return {"labels": store.dictionary.as_dict()}

    @app.post("/labels/dictionary", status_code=201, dependencies=[auth])
    async def add_dictionary_label(body: DictionaryAdd):
        name = store.add_label(body.name, LabelEntry(body.description, body.kind, tuple(body.aliases)))
        return {"canonical_label": name}

    @app.get("/labels/mappings", dependencies=[auth])
    async def list_mappings(dataset_id: str | None = None, status: str | None = None):
        if status is not None and status not in MAPPING_STATUSES:
            raise InvalidFilterError(f"status must be one of {MAPPING_STATUSES}")
        return [m.to_json() for m in store.list_mappings(dataset_id, status)]

    @app.post("/labels/mappings/{mapping_id}/decision", dependencies=[auth])
    async def decide_mapping(mapping_id: str, body: DecisionRequest):
        return store.decide(mapping_id, body.action, body.canonical, body.who).to_json()

    @app.post("/labels/apply", dependencies=[auth])
    async def apply_dataset_mappings(body: ApplyRequest):
        count = apply_mappings(store, body.dataset_id)
        return {"dataset_id": body.dataset_id, "relabeled_spans": count}

    # -- data --------------------------------------------------------------

    @app.get("/data/query", dependencies=[auth])
    async def data_query(
        label: list[str] | None = Query(None),
        dataset: list[str] | None = Query(None),
        subject: list[str] | None = Query(None),
        sensor_kind: str | None = None,
        min_duration_s: float | None = None,
        include_unlabeled: bool = False,
        select_all: bool = False,
        limit: int | None = Query(None, ge=1),
        offset: int = Query(0, ge=0),
    ):
        flt = QueryFilter(
            labels=frozenset(label) if label else None,
            dataset_ids=frozenset(dataset) if dataset else None,
            subject_ids=frozenset(subject) if subject else None,
            sensor_kind=sensor_kind,
            min_duration_s=min_duration_s,
            include_unlabeled=include_unlabeled,
            select_all=select_all,
        )
        entries = query(store, flt)
        window = entries[offset: offset + limit if limit else None]
        return [e.to_json() for e in window]

    @app.get("/data/recordings/{recording_id}", dependencies=[auth])
    async def export_recording(recording_id: str, format: Literal["csv", "uds"] = "csv"):
        if format == "uds":
            entry = store.get_entry(recording_id)
            data = (store.root / entry.segment_path).read_bytes()
            return Response(
                content=data,
                media_type="application/octet-stream",
                headers={"content-disposition": f'attachment; filename="{recording_id}.uds"'},
            )
        rec = store.read_recording(recording_id)
        return PlainTextResponse(recording_to_csv(rec), media_type="text/csv")

    # -- models --------------------------------------------------------------

    @app.post("/models/train", status_code=202, dependencies=[auth])
    async def train_model(body: TrainRequest, background: BackgroundTasks):
        flt = body.filter.to_filter()
        if flt.is_empty() and not flt.select_all:
            raise InvalidFilterError("set at least one criterion or pass select_all")
        spec = body.windowing.to_spec()  # validates geometry eagerly
        model_id = clf.new_model_id()
        store.save_model(model_id, {"format": clf.MODEL_FORMAT, "version": clf.MODEL_FORMAT_VERSION,
                                    "model_id": model_id, "kind": body.kind, "labels": [],
                                    "metadata": {}, "status": "building"})

        def task():
            try:
                model = clf.train_from_store(store, flt, spec, kind=body.kind, k=body.k, model_id=model_id)
                clf.register(store, model)
            except Exception as exc:
                log.exception("training %s failed", model_id)
                store.save_model(model_id, {"format": clf.MODEL_FORMAT, "version": clf.MODEL_FORMAT_VERSION,
                                            "model_id": model_id, "kind": body.kind, "labels": [],
                                            "metadata": {}, "status": "failed", "error": str(exc)})

        background.add_task(task)
        return {"model_id": model_id, "status": "building"}

    @app.get("/models", dependencies=[auth])
    async def list_models():
        return [_model_summary(p) for p in store.list_models()]

    @app.get("/models/{model_id}/download", dependencies=[auth])
    async def download_model(model_id: str):
        payload = store.load_model(model_id)
        if payload.get("status") == "building":
            raise ModelNotReadyError(f"model {model_id} is still training")
        if payload.get("status") == "failed":
            raise ModelNotReadyError(f"model {model_id} failed: {payload.get('error', '')}")
        return payload

    # -- online classification ------------------------------------------------

    @app.post("/classify", dependencies=[auth])
    async def classify_stream(body: ClassifyRequest):
        payload = store.load_model(body.model_id)
        if payload.get("status") not in (None, "ready"):
            raise ModelNotReadyError(f"model {body.model_id} is not ready")
        model = clf.deserialize(payload)
        samples = np.asarray(body.samples, dtype=np.float64).reshape(-1, 3)
        if body.rate_hz != CANONICAL_RATE_HZ:
            samples = resample(samples, body.rate_hz, CANONICAL_RATE_HZ)
        results = clf.classify_raw(model, samples, body.windowing.to_spec())
        return [{"t": t, "label": label, "confidence": confidence} for t, label, confidence in results]

    if ui_dir:
        from starlette.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
