"""HTTP application: sessions, garment catalog, async try-on jobs, history.

REST surface (JSON bodies, multipart upload, PNG download):

    POST /api/sessions                  multipart image + true sizes -> {session_id}
    GET  /api/garments                  catalog listing
    POST /api/sessions/{id}/tryon       {garment_id, size} -> {job_id}
    GET  /api/jobs/{id}                 {status, result_id?, error?}
    GET  /api/sessions/{id}             {profile, before_image_id, results[]}
    POST /api/sessions/{id}/continue    {result_id} -> 204
    GET  /api/images/{id}               image/png

Jobs run on a bounded worker pool; the queue returns 503 when full. Session
state persists as JSON in the data dir, images as content-addressed PNGs.
"""
from __future__ import annotations

import json
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse, Response

from . import imgio, pipeline
from .backends import BackendConfig, BackendSet, FixtureRegistry, make_backends
from .catalog import GarmentRecord, load_catalog
from .domain import SizeLabel, UserProfile
from .errors import BackendError, NoPersonDetected, UnknownFixture
from .pipeline import PipelineConfig
from .segmentation import TORSO
from .store import ImageStore


@dataclass
class ServiceConfig:
    data_dir: Path
    catalog_path: Path
    fixtures_dir: Path | None = None
    webui_dir: Path | None = None
    canvas_w: int = 512
    canvas_h: int = 768
    max_dim: int = 4096
    workers: int = 2
    queue_limit: int = 16
    session_ttl_s: float = 86400.0
    seed: int = 0
    keep_intermediates: bool = False
    backend: BackendConfig = field(default_factory=BackendConfig)

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        env = os.environ
        fixtures = env.get("SICO_FIXTURES")
        webui = env.get("SICO_WEBUI_DIR")
        return cls(
            data_dir=Path(env.get("SICO_DATA_DIR", "./data")),
            catalog_path=Path(env.get("SICO_CATALOG", "./assets/catalog/catalog.json")),
            fixtures_dir=Path(fixtures) if fixtures else None,
            webui_dir=Path(webui) if webui else None,
            canvas_w=int(env.get("SICO_CANVAS_W", "512")),
            canvas_h=int(env.get("SICO_CANVAS_H", "768")),
            max_dim=int(env.get("SICO_MAX_DIM", "4096")),
            workers=int(env.get("SICO_WORKERS", "2")),
            queue_limit=int(env.get("SICO_QUEUE_LIMIT", "16")),
            session_ttl_s=float(env.get("SICO_SESSION_TTL_S", "86400")),
            seed=int(env.get("SICO_SEED", "0")),
            keep_intermediates=env.get("SICO_KEEP_INTERMEDIATES", "") == "1",
            backend=BackendConfig.from_env(),
        )


@dataclass(frozen=True)
class ResultRecord:
    id: str
    image_id: str
    garment_id: str
    size: SizeLabel
    true_size: SizeLabel
    seed: int
    base_image_id: str
    created_at: float
    intermediates: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "result_id": self.id,
            "image_id": self.image_id,
            "garment_id": self.garment_id,
            "size": self.size.name,
            "true_size": self.true_size.name,
            "seed": self.seed,
            "base_image_id": self.base_image_id,
            "created_at": self.created_at,
            "intermediates": dict(self.intermediates),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ResultRecord":
        return cls(
            id=data["result_id"],
            image_id=data["image_id"],
            garment_id=data["garment_id"],
            size=SizeLabel.parse(data["size"]),
            true_size=SizeLabel.parse(data["true_size"]),
            seed=data["seed"],
            base_image_id=data["base_image_id"],
            created_at=data["created_at"],
            intermediates=data.get("intermediates", {}),
        )


@dataclass
class Session:
    id: str
    profile: UserProfile
    self_image_id: str
    before_image_id: str
    results: list[ResultRecord] = field(default_factory=list)
    created_at: float = 0.0
    last_used: float = 0.0

    def to_json(self) -> dict:
        return {
            "session_id": self.id,
            "profile": {
                "true_top_size": self.profile.true_top_size.name,
                "true_bottom_size": self.profile.true_bottom_size.name,
            },
            "self_image_id": self.self_image_id,
            "before_image_id": self.before_image_id,
            "results": [r.to_json() for r in self.results],
            "created_at": self.created_at,
            "last_used": self.last_used,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Session":
        return cls(
            id=data["session_id"],
            profile=UserProfile(
                true_top_size=SizeLabel.parse(data["profile"]["true_top_size"]),
                true_bottom_size=SizeLabel.parse(data["profile"]["true_bottom_size"]),
            ),
            self_image_id=data["self_image_id"],
            before_image_id=data["before_image_id"],
            results=[ResultRecord.from_json(r) for r in data.get("results", [])],
            created_at=data.get("created_at", 0.0),
            last_used=data.get("last_used", 0.0),
        )


JOB_STATES = ("queued", "running", "done", "failed")


@dataclass(frozen=True)
class Job:
    id: str
    session_id: str
    garment_id: str
    size: SizeLabel
    seed: int
    base_image_id: str
    status: str = "queued"
    result_id: str | None = None
    error: str | None = None
    created_at: float = 0.0
    started_at: float | None = None
    finished_at: float | None = None

    def to_json(self) -> dict:
        return {
            "job_id": self.id,
            "session_id": self.session_id,
            "garment_id": self.garment_id,
            "size": self.size.name,
            "seed": self.seed,
            "base_image_id": self.base_image_id,
            "status": self.status,
            "result_id": self.result_id,
            "error": self.error,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Job":
        return cls(
            id=data["job_id"],
            session_id=data["session_id"],
            garment_id=data["garment_id"],
            size=SizeLabel.parse(data["size"]),
            seed=data["seed"],
            base_image_id=data["base_image_id"],
            status=data["status"],
            result_id=data.get("result_id"),
            error=data.get("error"),
            created_at=data.get("created_at", 0.0),
            started_at=data.get("started_at"),
            finished_at=data.get("finished_at"),
        )


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class TryOnService:
    """All service state and operations, independent of the HTTP layer."""

    def __init__(self, config: ServiceConfig, backends: BackendSet | None = None,
                 pipeline_config: PipelineConfig | None = None):
        self.config = config
        self.catalog: dict[str, GarmentRecord] = {
            g.id: g for g in load_catalog(config.catalog_path)
        }
        config.data_dir.mkdir(parents=True, exist_ok=True)
        self.store = ImageStore(config.data_dir / "images")
        self.pipeline_config = pipeline_config or PipelineConfig(rng_seed=config.seed)

        if backends is None:
            registry = FixtureRegistry()
            if config.backend.mode == "mock" and config.fixtures_dir is not None:
                registry.register_root(config.fixtures_dir)
            backends = make_backends(config.backend, registry)
        self.backends = backends

        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, Job] = {}
        self.result_owner: dict[str, str] = {}
        self.garment_image_ids: dict[str, str] = {
            gid: self.store.put_image(rec.load_image()) for gid, rec in self.catalog.items()
        }

        self._lock = threading.RLock()
        self._session_locks: dict[str, threading.RLock] = {}
        self._queued = 0
        self._state_path = config.data_dir / "state.json"
        self._load_state()

        self.executor = ThreadPoolExecutor(max_workers=config.workers)

    # -- persistence --------------------------------------------------------

    def _load_state(self) -> None:
        if not self._state_path.exists():
            return
        data = json.loads(self._state_path.read_text())
        self.sessions = {s["session_id"]: Session.from_json(s) for s in data.get("sessions", [])}
        self.jobs = {j["job_id"]: Job.from_json(j) for j in data.get("jobs", [])}
        for session in self.sessions.values():
            for record in session.results:
                self.result_owner[record.id] = session.id
        # jobs interrupted by a previous shutdown can never complete
        for jid, job in list(self.jobs.items()):
            if job.status in ("queued", "running"):
                self.jobs[jid] = replace(job, status="failed",
                                         error="server restarted before completion",
                                         finished_at=time.time())

    def _persist(self) -> None:
        with self._lock:
            data = {
                "sessions": [s.to_json() for s in self.sessions.values()],
                "jobs": [j.to_json() for j in self.jobs.values()],
            }
        tmp = self._state_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data))
        tmp.rename(self._state_path)

    # -- session helpers ----------------------------------------------------

    def _session_lock(self, session_id: str) -> threading.RLock:
        with self._lock:
            return self._session_locks.setdefault(session_id, threading.RLock())

    def _get_session(self, session_id: str) -> Session:
        with self._lock:
            session = self.sessions.get(session_id)
            if session is not None and self.config.session_ttl_s > 0:
                if time.time() - session.last_used > self.config.session_ttl_s:
                    del self.sessions[session_id]
                    session = None
        if session is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id}")
        session.last_used = time.time()
        return session

    # -- operations ---------------------------------------------------------

    def create_session(self, image_bytes: bytes, true_top: str | None,
                       true_bottom: str | None) -> str:
        if not true_top or not true_bottom:
            raise ApiError(400, "MissingSize", "both true_top_size and true_bottom_size are required")
        try:
            profile = UserProfile(
                true_top_size=SizeLabel.parse(true_top),
                true_bottom_size=SizeLabel.parse(true_bottom),
            )
        except ValueError as exc:
            raise ApiError(400, "InvalidSize", str(exc)) from exc
        if not image_bytes:
            raise ApiError(400, "InvalidImage", "an image upload is required")
        try:
            image = imgio.decode_png(image_bytes)
        except Exception as exc:
            raise ApiError(400, "InvalidImage", f"image does not decode: {exc}") from exc
        h, w = image.shape[:2]
        if max(h, w) > self.config.max_dim:
            raise ApiError(400, "InvalidImage",
                           f"image {w}x{h} exceeds the {self.config.max_dim}px limit")

        canvas = imgio.letterbox(image, self.config.canvas_w, self.config.canvas_h)
        try:
            labels = self.backends.segmentation.parse(canvas)
        except (UnknownFixture, NoPersonDetected) as exc:
            raise ApiError(422, "NoPersonDetected", str(exc)) from exc
        except BackendError as exc:
            raise ApiError(502, "BackendError", str(exc)) from exc
        if not labels.mask_of(TORSO).any():
            raise ApiError(422, "NoPersonDetected", "no torso found in the uploaded photo")

        image_id = self.store.put_image(canvas)
        session = Session(
            id=uuid.uuid4().hex[:16],
            profile=profile,
            self_image_id=image_id,
            before_image_id=image_id,
            created_at=time.time(),
            last_used=time.time(),
        )
        with self._lock:
            self.sessions[session.id] = session
        self._persist()
        return session.id

    def list_garments(self) -> list[dict]:
        return [
            {
                "id": rec.id,
                "name": rec.name,
                "type": rec.metadata.garment_type.value,
                "length": rec.metadata.length.value,
                "sizes": [s.name for s in rec.sizes],
                "image_url": f"/api/images/{self.garment_image_ids[rec.id]}",
            }
            for rec in self.catalog.values()
        ]

    def submit_tryon(self, session_id: str, garment_id: str | None, size_text: str | None) -> str:
        session = self._get_session(session_id)
        if not garment_id or garment_id not in self.catalog:
            raise ApiError(404, "UnknownGarment", f"no garment {garment_id!r}")
        garment = self.catalog[garment_id]
        if not size_text:
            raise ApiError(400, "MissingSize", "a size is required")
        try:
            size = SizeLabel.parse(size_text)
        except ValueError as exc:
            raise ApiError(400, "InvalidSize", str(exc)) from exc
        if not garment.offers(size):
            offered = ", ".join(s.name for s in garment.sizes)
            raise ApiError(400, "SizeNotOffered",
                           f"garment {garment_id} is offered in {offered}, not {size.name}")

        with self._lock:
            if self._queued >= self.config.queue_limit:
                raise ApiError(503, "QueueFull", "try-on queue is full, retry later")
            job = Job(
                id=uuid.uuid4().hex[:16],
                session_id=session_id,
                garment_id=garment_id,
                size=size,
                seed=self.pipeline_config.rng_seed,
                base_image_id=session.before_image_id,
                created_at=time.time(),
            )
            self.jobs[job.id] = job
            self._queued += 1
        self._persist()
        self.executor.submit(self._run_job, job.id)
        return job.id

    def _set_job(self, job_id: str, **changes) -> Job:
        with self._lock:
            job = replace(self.jobs[job_id], **changes)
            self.jobs[job_id] = job
        return job

    def _run_job(self, job_id: str) -> None:
        with self._lock:
            job = self.jobs[job_id]
            if job.status != "queued":
                return
            self._queued -= 1
            job = replace(job, status="running", started_at=time.time())
            self.jobs[job_id] = job
        try:
            session = self.sessions[job.session_id]
            garment = self.catalog[job.garment_id]
            base = self.store.get_image(job.base_image_id)
            config = replace(self.pipeline_config, rng_seed=job.seed)
            result = pipeline.try_on(base, session.profile, garment, job.size,
                                     self.backends, config)
            image_id = self.store.put_image(result.image)
            intermediates: dict[str, str] = {}
            if self.config.keep_intermediates:
                for name, artifact in result.debug_artifacts().items():
                    if artifact.ndim == 2:
                        intermediates[name] = self.store.put_mask(artifact)
                    else:
                        intermediates[name] = self.store.put_image(artifact)
            record = ResultRecord(
                id=uuid.uuid4().hex[:16],
                image_id=image_id,
                garment_id=job.garment_id,
                size=job.size,
                true_size=result.true_size,
                seed=job.seed,
                base_image_id=job.base_image_id,
                created_at=time.time(),
                intermediates=intermediates,
            )
            with self._session_lock(job.session_id):
                session.results.append(record)
                with self._lock:
                    self.result_owner[record.id] = session.id
            self._set_job(job_id, status="done", result_id=record.id, finished_at=time.time())
        except Exception as exc:
            self._set_job(job_id, status="failed", error=str(exc), finished_at=time.time())
        self._persist()

    def get_job(self, job_id: str) -> Job:
        job = self.jobs.get(job_id)
        if job is None:
            raise ApiError(404, "UnknownJob", f"no job {job_id}")
        return job

    def get_session_view(self, session_id: str) -> dict:
        session = self._get_session(session_id)
        with self._session_lock(session_id):
            view = session.to_json()
        view.pop("last_used", None)
        return view

    def continue_from(self, session_id: str, result_id: str | None) -> None:
        session = self._get_session(session_id)
        if not result_id or result_id not in self.result_owner:
            raise ApiError(404, "UnknownResult", f"no result {result_id!r}")
        if self.result_owner[result_id] != session_id:
            raise ApiError(409, "ResultNotInSession",
                           f"result {result_id} belongs to a different session")
        with self._session_lock(session_id):
            record = next(r for r in session.results if r.id == result_id)
            session.before_image_id = record.image_id
        self._persist()

    def get_image_png(self, image_id: str) -> bytes:
        try:
            return self.store.get_png(image_id)
        except KeyError:
            raise ApiError(404, "UnknownImage", f"no image {image_id}") from None

    def shutdown(self) -> None:
        """Drain: running jobs finish, queued jobs fail, state persists."""
        self.executor.shutdown(wait=True, cancel_futures=True)
        with self._lock:
            for jid, job in list(self.jobs.items()):
                if job.status in ("queued", "running"):
                    self.jobs[jid] = replace(job, status="failed",
                                             error="server shutdown before execution",
                                             finished_at=time.time())
        self._persist()


def create_app(config: ServiceConfig, backends: BackendSet | None = None,
               pipeline_config: PipelineConfig | None = None) -> FastAPI:
    service = TryOnService(config, backends, pipeline_config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        service.shutdown()

    app = FastAPI(title="sizetryon", lifespan=lifespan)
    app.state.service = service

    @app.exception_handler(ApiError)
    async def handle_api_error(request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"detail": {"code": exc.code, "message": exc.message}})

    @app.post("/api/sessions", status_code=201)
    def create_session(image: UploadFile | None = File(None),
                       true_top_size: str | None = Form(None),
                       true_bottom_size: str | None = Form(None)):
        payload = image.file.read() if image is not None else b""
        session_id = service.create_session(payload, true_top_size, true_bottom_size)
        return {"session_id": session_id}

    @app.get("/api/garments")
    def list_garments():
        return service.list_garments()

    @app.post("/api/sessions/{session_id}/tryon", status_code=202)
    def submit_tryon(session_id: str, body: dict):
        job_id = service.submit_tryon(session_id, body.get("garment_id"), body.get("size"))
        return {"job_id": job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = service.get_job(job_id)
        return {"status": job.status, "result_id": job.result_id, "error": job.error}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return service.get_session_view(session_id)

    @app.post("/api/sessions/{session_id}/continue", status_code=204)
    def continue_from(session_id: str, body: dict):
        service.continue_from(session_id, body.get("result_id"))
        return Response(status_code=204)

    @app.get("/api/images/{image_id}")
    def get_image(image_id: str):
        return Response(content=service.get_image_png(image_id), media_type="image/png")

    if config.webui_dir is not None and Path(config.webui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=config.webui_dir, html=True), name="webui")

    return app
