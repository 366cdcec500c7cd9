"""FastAPI application exposing experiment submission, status and results."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Response

from cdma_jic.harness.config import ConfigError
from cdma_jic.service.jobs import Job, JobStore
from cdma_jic.service.models import (
    ExperimentRequest,
    HealthResponse,
    JobCreated,
    JobInfo,
    ResultsResponse,
    StepSizesModel,
)


def _job_info(store: JobStore, job: Job) -> JobInfo:
    return JobInfo(
        job_id=job.job_id,
        experiment=job.request.experiment,
        status=job.status,  # type: ignore[arg-type]
        trials_done=job.trials_done,
        trials_total=job.trials_total,
        error=job.error,
        files=store.files(job) if job.status == "done" else [],
    )


def create_app(output_root: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="cdma-jic", version="0.1.0")
    store = JobStore(output_root)
    app.state.store = store

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", jobs=len(store))

    @app.post("/experiments", response_model=JobCreated, status_code=202)
    def submit(request: ExperimentRequest) -> JobCreated:
        try:
            job = store.submit(request)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return JobCreated(job_id=job.job_id, status=job.status)

    @app.get("/experiments", response_model=list[JobInfo])
    def list_jobs() -> list[JobInfo]:
        return [_job_info(store, job) for job in store.list_jobs()]

    def _get_job(job_id: str) -> Job:
        job = store.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id!r}")
        return job

    @app.get("/experiments/{job_id}", response_model=JobInfo)
    def job_status(job_id: str) -> JobInfo:
        return _job_info(store, _get_job(job_id))

    @app.get("/experiments/{job_id}/results", response_model=ResultsResponse)
    def job_results(job_id: str) -> ResultsResponse:
        job = _get_job(job_id)
        if job.status == "failed":
            raise HTTPException(status_code=409, detail=f"job failed: {job.error}")
        if job.status != "done" or job.result is None:
            raise HTTPException(status_code=409, detail=f"job is {job.status}")
        result = job.result
        chosen = {
            label: StepSizesModel(mu_w=s.mu_w, mu_lambda=s.mu_lambda, mu_h=s.mu_h)
            for label, s in result.chosen.items()
        }
        return ResultsResponse(
            experiment=result.experiment,
            columns=result.columns,
            rows=result.rows,
            chosen_step_sizes=chosen,
        )

    @app.get("/experiments/{job_id}/files", response_model=list[str])
    def job_files(job_id: str) -> list[str]:
        job = _get_job(job_id)
        if job.status != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.status}")
        return store.files(job)

    @app.get("/experiments/{job_id}/files/{name}")
    def job_file(job_id: str, name: str) -> Response:
        job = _get_job(job_id)
        if name not in store.files(job):
            raise HTTPException(status_code=404, detail=f"no file {name!r}")
        data = (job.out_dir / name).read_bytes()
        media = "text/csv" if name.endswith(".csv") else "text/plain"
        return Response(content=data, media_type=f"{media}; charset=utf-8")

    return app


app = create_app()
