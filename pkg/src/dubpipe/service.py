"""Job-oriented HTTP service wrapping the pipeline.

Uploads become persistent jobs processed by a fixed worker pool; clients
poll job status, download results, and submit survey ratings that feed the
agreement endpoint. Jobs live in a directory-per-job store whose manifests
are written atomically, so a restart either re-queues a job that never
started or marks an interrupted one failed.

API (under /api/v1):
    POST /jobs                     multipart {video, target_language, voice_gender}
    GET  /jobs/{id}                status document
    GET  /jobs/{id}/result/{name}  name in {video, transcript, source}
    POST /jobs/{id}/ratings        {rater_id, lip_sync, translation_quality, audio_quality}
    GET  /agreement                ?language=&criterion=
    GET  /health
"""
from __future__ import annotations

import csv
import json
import os
import queue
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Form, Header, Request, UploadFile
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .agreement import (
    CRITERIA,
    RATINGS_CSV_HEADER,
    RatingRecord,
    build_report,
    report_to_dict,
)
from .backends import GENDERS, TARGET_LANGUAGES, BackendConfig, VoiceModel
from .errors import StageError
from .pipeline import PipelineConfig, run_pipeline

JOB_STATES = (
    "queued",
    "extracting",
    "segmenting",
    "transcribing",
    "translating",
    "synthesizing",
    "refining",
    "lipsync",
    "muxing",
    "done",
    "failed",
)

# pipeline stage completion -> job state that is now in progress
_STATE_AFTER_STAGE = {
    "extract": "segmenting",
    "segment": "transcribing",
    "asr": "translating",
    "translate": "synthesizing",
    "tts": "refining",
    "refine": "refining",
    "assemble": "lipsync",
    "lipsync": "muxing",
    "mux": "muxing",
}

RESULT_ARTIFACTS = ("video", "transcript", "source")


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path
    workers: int = max(1, os.cpu_count() or 1)
    upload_limit_bytes: int = 100 * 1024 * 1024
    extractor_cmd: str = PipelineConfig.extractor_cmd
    muxer_cmd: str = PipelineConfig.muxer_cmd
    lipsync_cmd: Optional[str] = None
    lipsync_mode: str = "audio_replace"
    backend_kind: str = "mock"
    asr_endpoint: Optional[str] = None
    mt_endpoint: Optional[str] = None
    tts_endpoint: Optional[str] = None
    auth_token: Optional[str] = None
    static_dir: Optional[Path] = None


class JobStore:
    """Directory-per-job persistence with atomic manifest updates."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()

    def job_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def manifest_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "job.json"

    def create(self, job_id: str, manifest: dict) -> None:
        self.job_dir(job_id).mkdir(parents=True)
        self.write(job_id, manifest)

    def write(self, job_id: str, manifest: dict) -> None:
        with self._lock:
            path = self.manifest_path(job_id)
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True))
            os.replace(tmp, path)

    def read(self, job_id: str) -> Optional[dict]:
        path = self.manifest_path(job_id)
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def update(self, job_id: str, **fields) -> dict:
        with self._lock:
            manifest = self.read(job_id)
            if manifest is None:
                raise KeyError(job_id)
            manifest.update(fields)
            self.write(job_id, manifest)
            return manifest

    def list_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "job.json").exists()
        )


class RatingsStore:
    """Append-only ratings CSV with per-(rater, video) dedup."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(",".join(RATINGS_CSV_HEADER) + "\n", encoding="utf-8")

    def records(self) -> list[RatingRecord]:
        from .agreement import load_ratings_csv

        with self._lock:
            return load_ratings_csv(self.path)

    def append_if_absent(self, rater_id: str, records: list[RatingRecord]) -> bool:
        """Append all records unless this rater already rated this video."""
        video_id = records[0].video_id
        with self._lock:
            from .agreement import load_ratings_csv

            existing = load_ratings_csv(self.path)
            if any(
                r.rater_id == rater_id and r.video_id == video_id for r in existing
            ):
                return False
            with open(self.path, "a", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                for r in records:
                    writer.writerow(
                        [r.language, r.video_id, r.rater_id, r.criterion, r.score]
                    )
            return True


class JobRunner:
    """Fixed-size worker pool consuming the durable job queue."""

    def __init__(self, cfg: ServiceConfig, store: JobStore):
        self.cfg = cfg
        self.store = store
        self.queue: queue.Queue[Optional[str]] = queue.Queue()
        self.threads: list[threading.Thread] = []
        self._started = False

    def start(self) -> None:
        self.recover()
        for _ in range(self.cfg.workers):
            thread = threading.Thread(target=self._worker, daemon=True)
            thread.start()
            self.threads.append(thread)
        self._started = True

    def stop(self) -> None:
        for _ in self.threads:
            self.queue.put(None)
        for thread in self.threads:
            thread.join(timeout=5)
        self.threads.clear()

    def recover(self) -> None:
        """Re-queue jobs that never started; fail jobs interrupted mid-run."""
        for job_id in self.store.list_ids():
            manifest = self.store.read(job_id)
            state = manifest.get("state")
            if state == "queued":
                self.queue.put(job_id)
            elif state not in ("done", "failed"):
                self.store.update(
                    job_id,
                    state="failed",
                    error=f"interrupted during {state} by a service restart",
                )

    def submit(self, job_id: str) -> None:
        self.queue.put(job_id)

    def _pipeline_config(self, manifest: dict) -> PipelineConfig:
        kind = self.cfg.backend_kind
        def backend(endpoint):
            return BackendConfig(kind=kind, endpoint=endpoint) if kind == "remote" else BackendConfig()
        target = manifest["target_language"]
        return PipelineConfig(
            target_lang=target,
            voice=VoiceModel(
                id=f"{kind}-{manifest['voice_gender']}-{target}",
                gender=manifest["voice_gender"],
                language=target,
            ),
            asr=backend(self.cfg.asr_endpoint),
            mt=backend(self.cfg.mt_endpoint),
            tts=backend(self.cfg.tts_endpoint),
            lipsync_mode=self.cfg.lipsync_mode,
            extractor_cmd=self.cfg.extractor_cmd,
            muxer_cmd=self.cfg.muxer_cmd,
            lipsync_cmd=self.cfg.lipsync_cmd,
        )

    def _worker(self) -> None:
        while True:
            job_id = self.queue.get()
            if job_id is None:
                return
            try:
                self._run_job(job_id)
            except Exception:
                pass  # _run_job records failures in the manifest
            finally:
                self.queue.task_done()

    def _run_job(self, job_id: str) -> None:
        manifest = self.store.read(job_id)
        if manifest is None or manifest["state"] != "queued":
            return
        job_dir = self.store.job_dir(job_id)
        self.store.update(job_id, state="extracting")

        completed: list[dict] = []

        def observer(stage, artifact):
            completed.append(
                {"stage": stage, "duration_ms": round(artifact.duration_ms, 3)}
            )
            self.store.update(
                job_id,
                state=_STATE_AFTER_STAGE[stage],
                stage_progress=completed,
            )

        try:
            result = run_pipeline(
                job_dir / manifest["source_name"],
                self._pipeline_config(manifest),
                observer=observer,
                workdir=job_dir / "work",
            )
        except StageError as exc:
            self.store.update(
                job_id, state="failed", error=f"stage {exc.stage}: {exc}"
            )
            return
        except Exception as exc:
            self.store.update(job_id, state="failed", error=str(exc))
            return

        self.store.update(
            job_id,
            state="done",
            video_out=str(result.video_out),
            transcript=str(result.video_out.parent / "transcript.json"),
            warnings=result.warnings,
        )


def _error(status: int, message: str, field_name: Optional[str] = None) -> JSONResponse:
    body = {"error": message}
    if field_name:
        body["field"] = field_name
    return JSONResponse(status_code=status, content=body)


def create_app(cfg: ServiceConfig) -> FastAPI:
    store = JobStore(Path(cfg.data_dir) / "jobs")
    ratings = RatingsStore(Path(cfg.data_dir) / "ratings.csv")
    runner = JobRunner(cfg, store)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        runner.start()
        yield
        runner.stop()

    app = FastAPI(title="dubpipe", lifespan=lifespan)
    app.state.store = store
    app.state.ratings = ratings
    app.state.runner = runner

    def check_auth(authorization: Optional[str]) -> Optional[JSONResponse]:
        if cfg.auth_token is None:
            return None
        if authorization != f"Bearer {cfg.auth_token}":
            return _error(401, "missing or invalid bearer token")
        return None

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/v1/jobs", status_code=202)
    async def create_job(
        video: UploadFile = File(...),
        target_language: str = Form(...),
        voice_gender: str = Form(...),
        authorization: Optional[str] = Header(default=None),
    ):
        denied = check_auth(authorization)
        if denied:
            return denied
        if target_language not in TARGET_LANGUAGES:
            return _error(
                400,
                f"target_language must be one of {sorted(TARGET_LANGUAGES)}",
                "target_language",
            )
        if voice_gender not in GENDERS:
            return _error(
                400, f"voice_gender must be one of {sorted(GENDERS)}", "voice_gender"
            )

        content = await video.read()
        if len(content) > cfg.upload_limit_bytes:
            return _error(
                413, f"upload exceeds {cfg.upload_limit_bytes} byte limit", "video"
            )
        if not content:
            return _error(400, "empty upload", "video")

        job_id = uuid.uuid4().hex
        source_name = f"source_{Path(video.filename or 'upload.bin').name}"
        store.create(
            job_id,
            {
                "id": job_id,
                "created_at": datetime.now(timezone.utc).isoformat(),
                "target_language": target_language,
                "voice_gender": voice_gender,
                "source_name": source_name,
                "state": "queued",
                "stage_progress": [],
                "error": None,
            },
        )
        (store.job_dir(job_id) / source_name).write_bytes(content)
        runner.submit(job_id)
        return {"job_id": job_id}

    @app.get("/api/v1/jobs/{job_id}")
    def get_job(job_id: str):
        manifest = store.read(job_id)
        if manifest is None:
            return _error(404, f"unknown job {job_id}")
        body = {
            "job_id": job_id,
            "state": manifest["state"],
            "stage_progress": manifest.get("stage_progress", []),
        }
        if manifest.get("error"):
            body["error"] = manifest["error"]
        if manifest["state"] == "done":
            base = f"/api/v1/jobs/{job_id}/result"
            body["result_links"] = {
                "video": f"{base}/video",
                "transcript": f"{base}/transcript",
                "source": f"{base}/source",
            }
        return body

    @app.get("/api/v1/jobs/{job_id}/result/{artifact}")
    def get_result(job_id: str, artifact: str):
        manifest = store.read(job_id)
        if manifest is None:
            return _error(404, f"unknown job {job_id}")
        if artifact not in RESULT_ARTIFACTS:
            return _error(404, f"unknown artifact {artifact!r}")
        if manifest["state"] != "done":
            return _error(409, f"job is {manifest['state']}, not done")
        if artifact == "video":
            return FileResponse(manifest["video_out"], media_type="application/octet-stream")
        if artifact == "transcript":
            return FileResponse(manifest["transcript"], media_type="application/json")
        return FileResponse(
            store.job_dir(job_id) / manifest["source_name"],
            media_type="application/octet-stream",
        )

    @app.post("/api/v1/jobs/{job_id}/ratings", status_code=201)
    async def post_rating(
        job_id: str,
        request: Request,
        authorization: Optional[str] = Header(default=None),
    ):
        denied = check_auth(authorization)
        if denied:
            return denied
        manifest = store.read(job_id)
        if manifest is None:
            return _error(404, f"unknown job {job_id}")
        if manifest["state"] != "done":
            return _error(409, f"job is {manifest['state']}, not done")
        try:
            body = await request.json()
        except Exception:
            return _error(422, "invalid JSON body")
        rater_id = body.get("rater_id")
        if not rater_id or not isinstance(rater_id, str):
            return _error(422, "rater_id is required", "rater_id")
        scores = {}
        for criterion in CRITERIA:
            value = body.get(criterion)
            if not isinstance(value, int) or not 1 <= value <= 5:
                return _error(
                    422, f"{criterion} must be an integer in [1, 5]", criterion
                )
            scores[criterion] = value
        accepted = ratings.append_if_absent(
            rater_id,
            [
                RatingRecord(
                    language=manifest["target_language"],
                    video_id=job_id,
                    rater_id=rater_id,
                    criterion=criterion,
                    score=score,
                )
                for criterion, score in scores.items()
            ],
        )
        if not accepted:
            return _error(409, f"rater {rater_id} already rated this job")
        return {"status": "recorded"}

    @app.get("/api/v1/agreement")
    def get_agreement(language: Optional[str] = None, criterion: Optional[str] = None):
        records = ratings.records()
        if language:
            records = [r for r in records if r.language == language]
        if criterion:
            records = [r for r in records if r.criterion == criterion]
        try:
            report = build_report(records)
        except ValueError as exc:
            return _error(422, f"insufficient data: {exc}")
        return report_to_dict(report)

    if cfg.static_dir and Path(cfg.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=cfg.static_dir, html=True), name="ui")

    return app
