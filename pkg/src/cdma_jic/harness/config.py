"""Experiment configuration: dataclass, file format, validation.

Config files are flat UTF-8 ``key = value`` text.  Lists are
comma-separated.  One optional section per receiver name carries its
step-size search grid:

    experiment = sweep-ebn0
    ebn0_db = 6, 9, 12, 15
    trials = 20
    receivers = linear, jo-sic

    [jo-sic]
    mu_w = 0.004, 0.008
    mu_lambda = 0.01
    mu_h = 0.01

Unknown keys and unknown section names are errors.  ``#`` starts a
comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from cdma_jic.estimators import StepSizes
from cdma_jic.receivers import RECEIVER_NAMES

__all__ = [
    "ConfigError",
    "StepSizeGrid",
    "ExperimentConfig",
    "EXPERIMENTS",
    "DEFAULT_GRIDS",
    "parse_config_text",
    "parse_config_file",
    "format_config",
]

EXPERIMENTS = ("convergence", "channel-mse", "sweep-ebn0", "sweep-users")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class StepSizeGrid:
    """Candidate step sizes searched per receiver; singletons skip the search."""

    mu_w: tuple[float, ...]
    mu_lambda: tuple[float, ...]
    mu_h: tuple[float, ...]

    def __post_init__(self) -> None:
        for name in ("mu_w", "mu_lambda", "mu_h"):
            vals = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, vals)
            if not vals:
                raise ConfigError(f"{name} grid must not be empty")
            if any(v <= 0 for v in vals):
                raise ConfigError(f"{name} grid values must be positive")

    @property
    def is_singleton(self) -> bool:
        return len(self.mu_w) == len(self.mu_lambda) == len(self.mu_h) == 1

    def single(self) -> StepSizes:
        if not self.is_singleton:
            raise ConfigError("grid has more than one candidate")
        return StepSizes(self.mu_w[0], self.mu_lambda[0], self.mu_h[0])


def _default_grids() -> dict[str, StepSizeGrid]:
    # Singletons tuned on the reference scenario (K=8, 12 dB, 1500-symbol
    # packets); singleton grids skip the pilot search entirely.
    return {
        "linear": StepSizeGrid((0.01,), (0.01,), (0.005,)),
        "sic": StepSizeGrid((0.015,), (0.01,), (0.002,)),
        "pic": StepSizeGrid((0.015,), (0.01,), (0.01,)),
        "jo-sic": StepSizeGrid((0.015,), (0.02,), (0.005,)),
        "jo-pic": StepSizeGrid((0.007,), (0.01,), (0.02,)),
    }


DEFAULT_GRIDS = _default_grids()


@dataclass
class ExperimentConfig:
    """Resolved experiment description; defaults follow the reference protocol."""

    experiment: str = "convergence"
    n: int = 16
    lp: int = 9
    k_users: int | list[int] = 8
    ebn0_db: float | list[float] = 12.0
    packet_len: int = 1500
    training_len: int = 150
    trials: int = 100
    receivers: list[str] = field(default_factory=lambda: list(RECEIVER_NAMES))
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
    step_sizes: dict[str, StepSizeGrid] = field(default_factory=_default_grids)

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not 1 <= self.lp <= self.n:
            raise ConfigError("lp must satisfy 1 <= lp <= n")
        if self.nonzero_paths < 1 or (self.nonzero_paths - 1) * 3 + 1 > self.lp:
            raise ConfigError("nonzero_paths does not fit in the lp-tap window")
        if self.packet_len < 1 or not 0 <= self.training_len < self.packet_len:
            raise ConfigError("need 0 <= training_len < packet_len")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.pic_stages < 1:
            raise ConfigError("pic_stages must be >= 1")
        if self.pilot_trials < 1:
            raise ConfigError("pilot_trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 < self.rho <= 1:
            raise ConfigError("rho must lie in (0, 1]")
        if self.power_std_db < 0:
            raise ConfigError("power_std_db must be >= 0")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be a non-negative integer")
        if not self.receivers:
            raise ConfigError("receivers must not be empty")
        seen = set()
        for r in self.receivers:
            if r not in RECEIVER_NAMES:
                raise ConfigError(f"unknown receiver {r!r}")
            if r in seen:
                raise ConfigError(f"receiver {r!r} listed twice")
            seen.add(r)
        for name in self.receivers:
            if name not in self.step_sizes:
                raise ConfigError(f"missing step sizes for receiver {name!r}")

        k_is_list = isinstance(self.k_users, list)
        e_is_list = isinstance(self.ebn0_db, list)
        if self.experiment == "sweep-users":
            if not k_is_list or len(self.k_users) < 2:
                raise ConfigError("sweep-users needs a list of at least two k_users values")
            if e_is_list:
                raise ConfigError("sweep-users needs a scalar ebn0_db")
        elif self.experiment == "sweep-ebn0":
            if not e_is_list or len(self.ebn0_db) < 2:
                raise ConfigError("sweep-ebn0 needs a list of at least two ebn0_db values")
            if k_is_list:
                raise ConfigError("sweep-ebn0 needs a scalar k_users")
        else:
            if k_is_list or e_is_list:
                raise ConfigError(f"{self.experiment} needs scalar k_users and ebn0_db")

        for k in self.k_users if k_is_list else [self.k_users]:
            if k < 1:
                raise ConfigError("k_users values must be >= 1")
        for e in self.ebn0_db if e_is_list else [self.ebn0_db]:
            if math.isnan(e) or e == -math.inf:
                raise ConfigError("ebn0_db must be finite or +inf")


# --- parsing ---------------------------------------------------------------

_INT_KEYS = {
    "n", "lp", "packet_len", "training_len", "trials", "pic_stages",
    "master_seed", "nonzero_paths", "pilot_trials", "workers",
}
_FLOAT_KEYS = {"power_std_db", "rho"}
_BOOL_KEYS = {"fixed_codes", "pin_first_tap", "freeze_after_training"}
_STR_KEYS = {"experiment"}
_SCALAR_OR_LIST = {"k_users": int, "ebn0_db": float}
_GRID_KEYS = ("mu_w", "mu_lambda", "mu_h")


def _parse_scalar(value: str, kind, key: str, lineno: int):
    try:
        if kind is bool:
            low = value.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(value)
        return kind(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {key} = {value!r}") from None


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse config text into a validated :class:`ExperimentConfig`."""
    cfg = ExperimentConfig()
    grids: dict[str, dict[str, tuple[float, ...]]] = {}
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in RECEIVER_NAMES:
                raise ConfigError(f"line {lineno}: unknown receiver section [{name}]")
            section = name
            grids.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if section is not None:
            if key not in _GRID_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
            vals = tuple(
                _parse_scalar(v.strip(), float, key, lineno)
                for v in value.split(",") if v.strip()
            )
            if not vals:
                raise ConfigError(f"line {lineno}: empty list for {key}")
            grids[section][key] = vals
            continue
        if key in _INT_KEYS:
            setattr(cfg, key, _parse_scalar(value, int, key, lineno))
        elif key in _FLOAT_KEYS:
            setattr(cfg, key, _parse_scalar(value, float, key, lineno))
        elif key in _BOOL_KEYS:
            setattr(cfg, key, _parse_scalar(value, bool, key, lineno))
        elif key in _STR_KEYS:
            setattr(cfg, key, value)
        elif key == "receivers":
            cfg.receivers = [v.strip() for v in value.split(",") if v.strip()]
        elif key in _SCALAR_OR_LIST:
            kind = _SCALAR_OR_LIST[key]
            parts = [v.strip() for v in value.split(",") if v.strip()]
            parsed = [_parse_scalar(v, kind, key, lineno) for v in parts]
            if not parsed:
                raise ConfigError(f"line {lineno}: empty value for {key}")
            setattr(cfg, key, parsed if "," in value else parsed[0])
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for name, spec in grids.items():
        base = cfg.step_sizes.get(name, DEFAULT_GRIDS[name])
        cfg.step_sizes[name] = StepSizeGrid(
            mu_w=spec.get("mu_w", base.mu_w),
            mu_lambda=spec.get("mu_lambda", base.mu_lambda),
            mu_h=spec.get("mu_h", base.mu_h),
        )
    cfg.validate()
    return cfg


def parse_config_file(path: str | Path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    if isinstance(value, list):
        return ", ".join(_fmt_value(v) for v in value)
    return str(value)


def format_config(cfg: ExperimentConfig) -> str:
    """Render a config back to parseable ``key = value`` text (grids included)."""
    lines = []
    for f in fields(cfg):
        if f.name == "step_sizes":
            continue
        lines.append(f"{f.name} = {_fmt_value(getattr(cfg, f.name))}")
    for name in cfg.receivers:
        grid = cfg.step_sizes[name]
        lines.append("")
        lines.append(f"[{name}]")
        for key in _GRID_KEYS:
            lines.append(f"{key} = {_fmt_value(list(getattr(grid, key)))}")
    return "\n".join(lines) + "\n"
