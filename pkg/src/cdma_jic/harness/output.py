"""CSV and manifest writers; all floats carry nine significant digits."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from cdma_jic.estimators import StepSizes
from cdma_jic.harness.config import ExperimentConfig, format_config

__all__ = ["fmt_float", "write_csv", "write_manifest"]


def fmt_float(value: float) -> str:
    return format(float(value), ".9g")


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, int, np.integer)):
        return str(int(value))
    return fmt_float(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_manifest(
    path: str | Path,
    config: ExperimentConfig,
    chosen: Mapping[str, StepSizes],
) -> Path:
    """Record the resolved config and the step sizes each receiver ran with."""
    path = Path(path)
    parts = ["# resolved experiment configuration", format_config(config)]
    parts.append("# chosen step sizes")
    for label, steps in chosen.items():
        parts.append(
            f"[{label}]\n"
            f"mu_w = {fmt_float(steps.mu_w)}\n"
            f"mu_lambda = {fmt_float(steps.mu_lambda)}\n"
            f"mu_h = {fmt_float(steps.mu_h)}\n"
        )
    path.write_text("\n".join(parts), encoding="utf-8", newline="\n")
    return path
