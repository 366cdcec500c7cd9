"""Background experiment jobs: one worker thread per submission."""

from __future__ import annotations

import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from cdma_jic.harness.runner import ExperimentResult, run_experiment
from cdma_jic.service.models import ExperimentRequest


@dataclass
class Job:
    job_id: str
    request: ExperimentRequest
    out_dir: Path
    status: str = "queued"
    trials_done: int = 0
    trials_total: int = 0
    error: str | None = None
    result: ExperimentResult | None = None


class JobStore:
    """Thread-safe registry of submitted experiments."""

    def __init__(self, output_root: str | Path | None = None):
        self._root = Path(output_root) if output_root else Path(tempfile.mkdtemp(prefix="cdma-jic-"))
        self._root.mkdir(parents=True, exist_ok=True)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._jobs)

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def list_jobs(self) -> list[Job]:
        with self._lock:
            return list(self._jobs.values())

    def submit(self, request: ExperimentRequest) -> Job:
        """Validate, register and start one experiment in a daemon thread."""
        config = request.to_config()  # raises ConfigError before anything is registered
        job_id = uuid.uuid4().hex[:12]
        job = Job(job_id=job_id, request=request, out_dir=self._root / job_id)
        with self._lock:
            self._jobs[job_id] = job

        def progress(done: int, total: int) -> None:
            job.trials_done = done
            job.trials_total = total

        def work() -> None:
            job.status = "running"
            try:
                job.result = run_experiment(config, job.out_dir, progress_cb=progress)
                job.status = "done"
            except Exception as exc:  # surfaced through the job status
                job.error = f"{type(exc).__name__}: {exc}"
                job.status = "failed"

        threading.Thread(target=work, daemon=True).start()
        return job

    def files(self, job: Job) -> list[str]:
        if not job.out_dir.is_dir():
            return []
        return sorted(p.name for p in job.out_dir.iterdir() if p.is_file())
