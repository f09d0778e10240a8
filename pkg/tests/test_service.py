import hashlib
import json
import time

import pytest
from fastapi.testclient import TestClient

from dubpipe.agreement import build_report, load_ratings_csv
from dubpipe.service import JOB_STATES, JobStore, ServiceConfig, create_app

UPLOAD = {"video": ("clip.mp4", b"fake video bytes " * 32, "video/mp4")}
FORM = {"target_language": "hi", "voice_gender": "female"}


def make_config(tmp_path, stub_tools, **overrides):
    defaults = dict(
        data_dir=tmp_path / "data",
        workers=2,
        extractor_cmd=stub_tools["synth_extractor_cmd"],
        muxer_cmd=stub_tools["muxer_cmd"],
    )
    defaults.update(overrides)
    return ServiceConfig(**defaults)


@pytest.fixture
def client(tmp_path, stub_tools):
    app = create_app(make_config(tmp_path, stub_tools))
    with TestClient(app) as c:
        yield c


def wait_terminal(client, job_id, timeout=60.0):
    states = []
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        body = client.get(f"/api/v1/jobs/{job_id}").json()
        if not states or states[-1] != body["state"]:
            states.append(body["state"])
        if body["state"] in ("done", "failed"):
            return states, body
        time.sleep(0.05)
    raise TimeoutError(f"job {job_id} still {states[-1] if states else '?'}")


def create_and_finish(client):
    response = client.post("/api/v1/jobs", files=UPLOAD, data=FORM)
    assert response.status_code == 202
    job_id = response.json()["job_id"]
    states, body = wait_terminal(client, job_id)
    assert body["state"] == "done", body
    return job_id, states, body


class TestJobLifecycle:
    def test_create_poll_result(self, client):
        job_id, states, body = create_and_finish(client)
        # states are observed in declared order, ending in done
        indices = [JOB_STATES.index(s) for s in states]
        assert indices == sorted(indices)
        assert states[-1] == "done"

        links = body["result_links"]
        video = client.get(links["video"])
        assert video.status_code == 200
        assert video.content.startswith(b"MUXED")

        transcript = client.get(links["transcript"])
        assert transcript.status_code == 200
        entries = transcript.json()
        assert len(entries) == 1
        assert set(entries[0]) == {"index", "start_s", "end_s", "source_text", "target_text"}

        source = client.get(links["source"])
        assert source.status_code == 200
        assert source.content == UPLOAD["video"][1]

    def test_job_document_shape(self, client):
        response = client.post("/api/v1/jobs", files=UPLOAD, data=FORM)
        job_id = response.json()["job_id"]
        body = client.get(f"/api/v1/jobs/{job_id}").json()
        assert body["state"] in JOB_STATES
        wait_terminal(client, job_id)

    def test_invalid_language_400(self, client):
        response = client.post(
            "/api/v1/jobs", files=UPLOAD, data={"target_language": "fr", "voice_gender": "male"}
        )
        assert response.status_code == 400
        assert response.json()["field"] == "target_language"

    def test_invalid_gender_400(self, client):
        response = client.post(
            "/api/v1/jobs", files=UPLOAD, data={"target_language": "hi", "voice_gender": "robot"}
        )
        assert response.status_code == 400
        assert response.json()["field"] == "voice_gender"

    def test_oversize_upload_413(self, tmp_path, stub_tools):
        app = create_app(make_config(tmp_path, stub_tools, upload_limit_bytes=64))
        with TestClient(app) as client:
            response = client.post("/api/v1/jobs", files=UPLOAD, data=FORM)
            assert response.status_code == 413

    def test_unknown_job_404(self, client):
        assert client.get("/api/v1/jobs/deadbeef").status_code == 404
        assert client.get("/api/v1/jobs/deadbeef/result/video").status_code == 404

    def test_result_before_done_409(self, tmp_path, stub_tools):
        # no workers: the job stays queued
        app = create_app(make_config(tmp_path, stub_tools, workers=0))
        with TestClient(app) as client:
            job_id = client.post("/api/v1/jobs", files=UPLOAD, data=FORM).json()["job_id"]
            status = client.get(f"/api/v1/jobs/{job_id}").json()
            assert "result_links" not in status  # links appear only once done
            response = client.get(f"/api/v1/jobs/{job_id}/result/video")
            assert response.status_code == 409

    def test_concurrent_uploads_distinct_and_deterministic(self, client):
        ids = [
            client.post("/api/v1/jobs", files=UPLOAD, data=FORM).json()["job_id"]
            for _ in range(3)
        ]
        assert len(set(ids)) == 3
        digests = set()
        for job_id in ids:
            _, body = wait_terminal(client, job_id)
            assert body["state"] == "done"
            video = client.get(body["result_links"]["video"]).content
            digests.add(hashlib.sha256(video).hexdigest())
        assert len(digests) == 1  # same input, same config, same artifact


class TestRatings:
    def test_rating_flow_and_agreement(self, client, tmp_path):
        job_id, _, _ = create_and_finish(client)
        payload = {
            "rater_id": "r1",
            "lip_sync": 3,
            "translation_quality": 4,
            "audio_quality": 5,
        }
        assert client.post(f"/api/v1/jobs/{job_id}/ratings", json=payload).status_code == 201

        duplicate = client.post(f"/api/v1/jobs/{job_id}/ratings", json=payload)
        assert duplicate.status_code == 409

        second = dict(payload, rater_id="r2", lip_sync=4)
        assert client.post(f"/api/v1/jobs/{job_id}/ratings", json=second).status_code == 201

        report = client.get("/api/v1/agreement", params={"language": "hi"})
        assert report.status_code == 200
        assert "hi" in report.json()["languages"]

    def test_out_of_range_score_422(self, client):
        job_id, _, _ = create_and_finish(client)
        payload = {"rater_id": "r1", "lip_sync": 6, "translation_quality": 4, "audio_quality": 5}
        assert client.post(f"/api/v1/jobs/{job_id}/ratings", json=payload).status_code == 422

    def test_rating_requires_done_job(self, tmp_path, stub_tools):
        app = create_app(make_config(tmp_path, stub_tools, workers=0))
        with TestClient(app) as client:
            job_id = client.post("/api/v1/jobs", files=UPLOAD, data=FORM).json()["job_id"]
            payload = {"rater_id": "r1", "lip_sync": 3, "translation_quality": 3, "audio_quality": 3}
            assert client.post(f"/api/v1/jobs/{job_id}/ratings", json=payload).status_code == 409

    def test_rating_unknown_job_404(self, client):
        payload = {"rater_id": "r1", "lip_sync": 3, "translation_quality": 3, "audio_quality": 3}
        assert client.post("/api/v1/jobs/nope/ratings", json=payload).status_code == 404


class TestAgreementEndpoint:
    def test_empty_store_422(self, client):
        assert client.get("/api/v1/agreement").status_code == 422

    def test_matches_offline_computation(self, tmp_path, stub_tools):
        cfg = make_config(tmp_path, stub_tools)
        csv_path = cfg.data_dir / "ratings.csv"
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        rows = ["language,video_id,rater_id,criterion,score"]
        scores = {
            "r1": [1, 3, 4, 2, 5],
            "r2": [2, 3, 4, 1, 5],
            "r3": [1, 4, 4, 2, 4],
        }
        for rater, values in scores.items():
            for video, score in enumerate(values):
                for criterion in ("lip_sync", "translation_quality", "audio_quality"):
                    rows.append(f"bn,v{video},{rater},{criterion},{score}")
        csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

        app = create_app(cfg)
        with TestClient(app) as client:
            served = client.get("/api/v1/agreement").json()
        offline = build_report(load_ratings_csv(csv_path))
        expected = offline.slices[("bn", "lip_sync")]
        got = served["languages"]["bn"]["lip_sync"]
        assert got["pearson_avg"] == pytest.approx(expected.pearson_avg)
        assert got["cohen_avg"] == pytest.approx(expected.cohen_avg)
        assert got["fleiss"] == pytest.approx(expected.fleiss)


class TestRecovery:
    def _seed_job(self, data_dir, job_id, state):
        store = JobStore(data_dir / "jobs")
        store.create(
            job_id,
            {
                "id": job_id,
                "created_at": "2000-01-01T00:00:00+00:00",
                "target_language": "hi",
                "voice_gender": "female",
                "source_name": "source_clip.mp4",
                "state": state,
                "stage_progress": [],
                "error": None,
            },
        )
        (store.job_dir(job_id) / "source_clip.mp4").write_bytes(b"bytes")

    def test_interrupted_job_marked_failed(self, tmp_path, stub_tools):
        cfg = make_config(tmp_path, stub_tools)
        self._seed_job(cfg.data_dir, "interrupted1", "transcribing")
        with TestClient(create_app(cfg)) as client:
            body = client.get("/api/v1/jobs/interrupted1").json()
            assert body["state"] == "failed"
            assert "restart" in body["error"]

    def test_queued_job_resumes_after_restart(self, tmp_path, stub_tools):
        cfg = make_config(tmp_path, stub_tools)
        self._seed_job(cfg.data_dir, "queued1", "queued")
        with TestClient(create_app(cfg)) as client:
            states, body = wait_terminal(client, "queued1")
            assert body["state"] == "done"

    def test_no_job_left_non_terminal_and_unowned(self, tmp_path, stub_tools):
        cfg = make_config(tmp_path, stub_tools)
        for i, state in enumerate(("extracting", "refining", "muxing")):
            self._seed_job(cfg.data_dir, f"zombie{i}", state)
        with TestClient(create_app(cfg)) as client:
            for i in range(3):
                state = client.get(f"/api/v1/jobs/zombie{i}").json()["state"]
                assert state in ("done", "failed")


class TestAuth:
    def test_token_required_when_configured(self, tmp_path, stub_tools):
        cfg = make_config(tmp_path, stub_tools, auth_token="sekrit")
        with TestClient(create_app(cfg)) as client:
            denied = client.post("/api/v1/jobs", files=UPLOAD, data=FORM)
            assert denied.status_code == 401
            allowed = client.post(
                "/api/v1/jobs",
                files=UPLOAD,
                data=FORM,
                headers={"Authorization": "Bearer sekrit"},
            )
            assert allowed.status_code == 202
            wait_terminal(client, allowed.json()["job_id"])


def test_health(client):
    assert client.get("/api/v1/health").json() == {"status": "ok"}
