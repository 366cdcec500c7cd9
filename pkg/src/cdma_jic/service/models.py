"""Request and response models for the experiment service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel

from cdma_jic.harness.config import DEFAULT_GRIDS, ExperimentConfig, StepSizeGrid
from cdma_jic.receivers import RECEIVER_NAMES


class StepSizeGridModel(BaseModel):
    """Per-receiver step-size grid; omitted entries fall back to defaults."""

    mu_w: list[float] | None = None
    mu_lambda: list[float] | None = None
    mu_h: list[float] | None = None

    model_config = {"extra": "forbid"}


class ExperimentRequest(BaseModel):
    """Mirror of the experiment config, submitted as JSON."""

    experiment: Literal["convergence", "channel-mse", "sweep-ebn0", "sweep-users"] = "convergence"
    n: int = 16
    lp: int = 9
    k_users: int | list[int] = 8
    ebn0_db: float | list[float] = 12.0
    packet_len: int = 1500
    training_len: int = 150
    trials: int = 100
    receivers: list[str] = list(RECEIVER_NAMES)
    pic_stages: int = 3
    master_seed: int = 12345
    nonzero_paths: int = 3
    power_std_db: float = 3.0
    rho: float = 0.05
    pilot_trials: int = 5
    workers: int = 1
    fixed_codes: bool = False
    pin_first_tap: bool = True
    freeze_after_training: bool = False
    step_sizes: dict[str, StepSizeGridModel] = {}

    model_config = {"extra": "forbid"}

    def to_config(self) -> ExperimentConfig:
        """Build and validate the harness config; raises ConfigError when bad."""
        grids = {name: grid for name, grid in DEFAULT_GRIDS.items()}
        for name, model in self.step_sizes.items():
            base = grids.get(name, None)
            if base is None:
                from cdma_jic.harness.config import ConfigError

                raise ConfigError(f"unknown receiver {name!r} in step_sizes")
            grids[name] = StepSizeGrid(
                mu_w=tuple(model.mu_w) if model.mu_w else base.mu_w,
                mu_lambda=tuple(model.mu_lambda) if model.mu_lambda else base.mu_lambda,
                mu_h=tuple(model.mu_h) if model.mu_h else base.mu_h,
            )
        cfg = ExperimentConfig(
            experiment=self.experiment,
            n=self.n,
            lp=self.lp,
            k_users=self.k_users,
            ebn0_db=self.ebn0_db,
            packet_len=self.packet_len,
            training_len=self.training_len,
            trials=self.trials,
            receivers=list(self.receivers),
            pic_stages=self.pic_stages,
            master_seed=self.master_seed,
            nonzero_paths=self.nonzero_paths,
            power_std_db=self.power_std_db,
            rho=self.rho,
            pilot_trials=self.pilot_trials,
            workers=self.workers,
            fixed_codes=self.fixed_codes,
            pin_first_tap=self.pin_first_tap,
            freeze_after_training=self.freeze_after_training,
            step_sizes=grids,
        )
        cfg.validate()
        return cfg


class JobCreated(BaseModel):
    job_id: str
    status: str


class JobInfo(BaseModel):
    job_id: str
    experiment: str
    status: Literal["queued", "running", "done", "failed"]
    trials_done: int
    trials_total: int
    error: str | None = None
    files: list[str] = []


class StepSizesModel(BaseModel):
    mu_w: float
    mu_lambda: float
    mu_h: float


class ResultsResponse(BaseModel):
    experiment: str
    columns: list[str]
    rows: list[list[float | int | str]]
    chosen_step_sizes: dict[str, StepSizesModel]


class HealthResponse(BaseModel):
    status: str
    jobs: int
