"""Monte Carlo harness: experiment configs, trial runner, CSV outputs."""

from cdma_jic.harness.config import (
    ConfigError,
    ExperimentConfig,
    StepSizeGrid,
    parse_config_file,
    parse_config_text,
)
from cdma_jic.harness.runner import (
    ExperimentResult,
    TrialMetrics,
    TrialSpec,
    noise_variance,
    optimize_step_sizes,
    run_experiment,
    run_trial,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "StepSizeGrid",
    "parse_config_file",
    "parse_config_text",
    "ExperimentResult",
    "TrialMetrics",
    "TrialSpec",
    "noise_variance",
    "optimize_step_sizes",
    "run_experiment",
    "run_trial",
]
