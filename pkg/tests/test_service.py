"""HTTP service: submission, polling, results, file downloads, failure paths."""

import time

import pytest
from fastapi.testclient import TestClient

from cdma_jic.harness.config import ExperimentConfig
from cdma_jic.harness.runner import run_experiment
from cdma_jic.service.app import create_app

TINY = dict(
    n=8, lp=3, nonzero_paths=1, k_users=2, packet_len=40, training_len=10,
    trials=2, receivers=["linear", "jo-sic"], pic_stages=2, master_seed=7,
)


@pytest.fixture()
def served(tmp_path):
    app = create_app(output_root=tmp_path / "jobs")
    with TestClient(app) as client:
        yield client, tmp_path / "jobs"


def wait_done(client, job_id, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        info = client.get(f"/experiments/{job_id}").json()
        if info["status"] in ("done", "failed"):
            return info
        time.sleep(0.02)
    raise TimeoutError(f"job {job_id} did not finish")


class TestLifecycle:
    def test_health(self, served):
        client, _ = served
        body = client.get("/health").json()
        assert body == {"status": "ok", "jobs": 0}

    def test_submit_poll_results_files(self, served):
        client, root = served
        resp = client.post("/experiments", json=TINY)
        assert resp.status_code == 202
        job_id = resp.json()["job_id"]

        info = wait_done(client, job_id)
        assert info["status"] == "done"
        assert info["trials_done"] == info["trials_total"] == TINY["trials"]
        assert info["files"] == ["convergence.csv", "manifest.txt"]

        results = client.get(f"/experiments/{job_id}/results").json()
        assert results["experiment"] == "convergence"
        assert results["columns"] == ["symbol_index", "receiver", "ber", "stderr"]
        assert len(results["rows"]) == TINY["packet_len"] * len(TINY["receivers"])
        assert set(results["chosen_step_sizes"]) == set(TINY["receivers"])

        names = client.get(f"/experiments/{job_id}/files").json()
        assert names == ["convergence.csv", "manifest.txt"]
        for name in names:
            resp = client.get(f"/experiments/{job_id}/files/{name}")
            assert resp.status_code == 200
            assert resp.content == (root / job_id / name).read_bytes()

    def test_served_bytes_match_local_run(self, served, tmp_path):
        client, root = served
        job_id = client.post("/experiments", json=TINY).json()["job_id"]
        wait_done(client, job_id)

        cfg = ExperimentConfig(**{k: v for k, v in TINY.items()})
        local = run_experiment(cfg, tmp_path / "local")
        remote_csv = client.get(f"/experiments/{job_id}/files/convergence.csv").content
        assert remote_csv == local.csv_path.read_bytes()
        remote_manifest = client.get(f"/experiments/{job_id}/files/manifest.txt").content
        assert remote_manifest == local.manifest_path.read_bytes()

    def test_job_listing(self, served):
        client, _ = served
        a = client.post("/experiments", json=TINY).json()["job_id"]
        b = client.post("/experiments", json=TINY).json()["job_id"]
        listed = {j["job_id"] for j in client.get("/experiments").json()}
        assert {a, b} <= listed
        assert client.get("/health").json()["jobs"] >= 2

    def test_step_size_override_applies(self, served):
        client, _ = served
        body = dict(TINY, step_sizes={"linear": {"mu_w": [0.02]}})
        job_id = client.post("/experiments", json=body).json()["job_id"]
        wait_done(client, job_id)
        chosen = client.get(f"/experiments/{job_id}/results").json()["chosen_step_sizes"]
        assert chosen["linear"]["mu_w"] == 0.02


class TestErrorPaths:
    def test_invalid_config_is_400(self, served):
        client, _ = served
        resp = client.post("/experiments", json=dict(TINY, lp=20))
        assert resp.status_code == 400
        assert "lp" in resp.json()["detail"]

    def test_unknown_field_is_422(self, served):
        client, _ = served
        resp = client.post("/experiments", json=dict(TINY, chips=16))
        assert resp.status_code == 422

    def test_unknown_receiver_in_step_sizes_is_400(self, served):
        client, _ = served
        resp = client.post("/experiments", json=dict(TINY, step_sizes={"zf": {"mu_w": [0.1]}}))
        assert resp.status_code == 400

    def test_unknown_job_is_404(self, served):
        client, _ = served
        assert client.get("/experiments/deadbeef").status_code == 404
        assert client.get("/experiments/deadbeef/results").status_code == 404
        assert client.get("/experiments/deadbeef/files").status_code == 404

    def test_results_before_done_is_409(self, served):
        client, _ = served
        slow = dict(TINY, packet_len=800, trials=20, training_len=80, receivers=["linear"])
        job_id = client.post("/experiments", json=slow).json()["job_id"]
        resp = client.get(f"/experiments/{job_id}/results")
        assert resp.status_code == 409
        wait_done(client, job_id)
        assert client.get(f"/experiments/{job_id}/results").status_code == 200

    def test_unknown_file_name_is_404(self, served):
        client, _ = served
        job_id = client.post("/experiments", json=TINY).json()["job_id"]
        wait_done(client, job_id)
        assert client.get(f"/experiments/{job_id}/files/nope.csv").status_code == 404

    def test_worker_crash_reports_failed(self, served, monkeypatch):
        client, _ = served
        def boom(*args, **kwargs):
            raise RuntimeError("disk on fire")
        monkeypatch.setattr("cdma_jic.service.jobs.run_experiment", boom)
        job_id = client.post("/experiments", json=TINY).json()["job_id"]
        info = wait_done(client, job_id)
        assert info["status"] == "failed"
        assert "RuntimeError: disk on fire" in info["error"]
        resp = client.get(f"/experiments/{job_id}/results")
        assert resp.status_code == 409
        assert "failed" in resp.json()["detail"]
