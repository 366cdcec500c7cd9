"""Monte Carlo trial runner and experiment orchestration.

Seed discipline: the master seed owns a SeedSequence whose first-level
children are (pilot, evaluation, codes).  Each sweep point gets one child
of each, and every trial spawns five named streams (codes, channels,
powers, symbols, noise).  Trials are pure functions of (spec, seed), so
sequential and process-parallel execution aggregate to identical bytes.

Every receiver in a trial consumes the identical received packet; signal
realizations are redrawn each trial unless fixed-code mode pins the
signatures across trials.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from cdma_jic.estimators import StepSizes
from cdma_jic.harness.config import ExperimentConfig, StepSizeGrid
from cdma_jic.harness.output import write_csv, write_manifest
from cdma_jic.receivers import PacketContext, make_pipeline
from cdma_jic.signal_model import (
    SpreadingCode,
    UserConfig,
    ChannelVector,
    generate_amplitudes,
    generate_channel,
    generate_code,
    generate_symbols,
    synthesize_packet,
)

__all__ = [
    "TrialSpec",
    "TrialMetrics",
    "ExperimentResult",
    "noise_variance",
    "run_trial",
    "optimize_step_sizes",
    "run_experiment",
]

_CSV_NAMES = {
    "convergence": "convergence.csv",
    "channel-mse": "channel_mse.csv",
    "sweep-ebn0": "sweep_ebn0.csv",
    "sweep-users": "sweep_users.csv",
}


def noise_variance(ebn0_db: float) -> float:
    """Map target Eb/N0 in dB to the noise variance at unit mean user power."""
    if np.isinf(ebn0_db):
        return 0.0
    return float(10.0 ** (-ebn0_db / 10.0))


@dataclass(frozen=True)
class TrialSpec:
    """Scalar-resolved parameters of one Monte Carlo point."""

    n: int
    lp: int
    k_users: int
    ebn0_db: float
    packet_len: int
    training_len: int
    pic_stages: int
    nonzero_paths: int
    power_std_db: float
    rho: float
    pin_first_tap: bool
    freeze_after_training: bool
    receivers: tuple[str, ...]


@dataclass
class TrialMetrics:
    """Per-symbol error counts and channel MSE for one receiver in one trial."""

    bit_errors: np.ndarray
    mse: np.ndarray
    dd_errors: int
    dd_bits: int

    @property
    def ber_final(self) -> float:
        return self.dd_errors / self.dd_bits


@dataclass
class ExperimentResult:
    experiment: str
    columns: list[str]
    rows: list[list]
    chosen: dict[str, StepSizes]
    csv_path: Path
    manifest_path: Path

    @property
    def files(self) -> list[Path]:
        return [self.csv_path, self.manifest_path]


def _spec_from_config(cfg: ExperimentConfig, k_users: int, ebn0_db: float) -> TrialSpec:
    return TrialSpec(
        n=cfg.n,
        lp=cfg.lp,
        k_users=int(k_users),
        ebn0_db=float(ebn0_db),
        packet_len=cfg.packet_len,
        training_len=cfg.training_len,
        pic_stages=cfg.pic_stages,
        nonzero_paths=cfg.nonzero_paths,
        power_std_db=cfg.power_std_db,
        rho=cfg.rho,
        pin_first_tap=cfg.pin_first_tap,
        freeze_after_training=cfg.freeze_after_training,
        receivers=tuple(cfg.receivers),
    )


def _scale_invariant_mse(h_bank: np.ndarray, h_true: np.ndarray, true_norm2: np.ndarray) -> float:
    """Mean over users of min_c ||c h_hat - h||^2 / ||h||^2."""
    num = np.abs(np.sum(h_bank.conj() * h_true, axis=1)) ** 2
    den = np.sum(np.abs(h_bank) ** 2, axis=1) * true_norm2
    with np.errstate(invalid="ignore", divide="ignore"):
        mse = np.where(den > 0, 1.0 - num / den, 1.0)
    return float(np.mean(mse))


def _run_receiver(pipeline, received: np.ndarray, symbols: np.ndarray,
                  h_true: np.ndarray, training_len: int) -> TrialMetrics:
    m_dim, length = received.shape
    k_users = symbols.shape[0]
    bit_errors = np.zeros(length, dtype=np.int64)
    mse = np.zeros(length)
    true_norm2 = np.sum(np.abs(h_true) ** 2, axis=1)
    for i in range(length):
        r_next = received[:, i + 1] if i + 1 < length else None
        decisions = pipeline.process_symbol(i, received[:, i], r_next)
        truth = symbols[:, i]
        bit_errors[i] = int(
            np.count_nonzero(decisions.real != truth.real)
            + np.count_nonzero(decisions.imag != truth.imag)
        )
        mse[i] = _scale_invariant_mse(pipeline.channel_estimates(), h_true, true_norm2)
    dd_errors = int(bit_errors[training_len:].sum())
    dd_bits = 2 * k_users * (length - training_len)
    return TrialMetrics(bit_errors=bit_errors, mse=mse, dd_errors=dd_errors, dd_bits=dd_bits)


def run_trial(
    spec: TrialSpec,
    trial_seed: np.random.SeedSequence | int,
    step_sizes: Mapping[str, StepSizes],
    codes: Sequence[SpreadingCode] | None = None,
) -> dict[str, TrialMetrics]:
    """One packet, all configured receivers on the identical realization."""
    ss = trial_seed if isinstance(trial_seed, np.random.SeedSequence) else np.random.SeedSequence(trial_seed)
    codes_ss, chan_ss, pow_ss, sym_ss, noise_ss = ss.spawn(5)
    k = spec.k_users
    if codes is None:
        rng = np.random.default_rng(codes_ss)
        codes = [generate_code(rng, spec.n) for _ in range(k)]
    elif len(codes) != k:
        raise ValueError("fixed codes must match k_users")
    rng = np.random.default_rng(chan_ss)
    channels = [
        generate_channel(rng, spec.lp, spec.nonzero_paths, pin_first_tap=spec.pin_first_tap)
        for _ in range(k)
    ]
    amplitudes = generate_amplitudes(np.random.default_rng(pow_ss), k, spec.power_std_db)
    rng = np.random.default_rng(sym_ss)
    symbols = np.stack([generate_symbols(rng, spec.packet_len).symbols for _ in range(k)])
    users = [
        UserConfig(amplitude=float(a), code=c, channel=h)
        for a, c, h in zip(amplitudes, codes, channels)
    ]
    received = synthesize_packet(
        users, symbols, noise_variance(spec.ebn0_db), np.random.default_rng(noise_ss)
    )
    h_true = np.stack([h.taps for h in channels])
    ctx = PacketContext.from_codes(
        codes, spec.lp, symbols[:, : spec.training_len], spec.packet_len, amplitudes**2
    )
    out: dict[str, TrialMetrics] = {}
    for name in spec.receivers:
        pipeline = make_pipeline(
            name,
            ctx,
            step_sizes[name],
            pic_stages=spec.pic_stages,
            rho=spec.rho,
            freeze_after_training=spec.freeze_after_training,
        )
        out[name] = _run_receiver(pipeline, received, symbols, h_true, spec.training_len)
    return out


def optimize_step_sizes(
    spec: TrialSpec,
    receiver: str,
    grid: StepSizeGrid,
    pilot_seeds: Sequence[np.random.SeedSequence],
    codes: Sequence[SpreadingCode] | None = None,
    progress: Callable[[], None] | None = None,
) -> StepSizes:
    """Pick step sizes by mean BER over pilot trials; ties take the smallest.

    A singleton grid is returned immediately without running pilots.  The
    pilot seeds must come from a sub-stream distinct from the evaluation
    trials so that the selection never sees evaluation data.
    """
    candidates = sorted(itertools.product(grid.mu_w, grid.mu_lambda, grid.mu_h))
    if len(candidates) == 1:
        return StepSizes(*candidates[0])
    pilot_spec = replace(spec, receivers=(receiver,))
    best: tuple[float, StepSizes] | None = None
    with np.errstate(over="ignore", invalid="ignore"):
        for cand in candidates:
            steps = StepSizes(*cand)
            bers = []
            for seed in pilot_seeds:
                bers.append(run_trial(pilot_spec, seed, {receiver: steps}, codes)[receiver].ber_final)
                if progress is not None:
                    progress()
            mean_ber = float(np.mean(bers))
            if best is None or mean_ber < best[0]:
                best = (mean_ber, steps)
    assert best is not None
    return best[1]


def _run_trials(
    spec: TrialSpec,
    seeds: Sequence[np.random.SeedSequence],
    step_sizes: Mapping[str, StepSizes],
    codes: Sequence[SpreadingCode] | None,
    workers: int,
    progress: Callable[[], None] | None,
) -> list[dict[str, TrialMetrics]]:
    def fail(idx: int, exc: Exception) -> RuntimeError:
        seed = seeds[idx]
        return RuntimeError(
            f"trial {idx} (spawn_key={seed.spawn_key}, entropy={seed.entropy}) "
            f"failed: {type(exc).__name__}: {exc}"
        )

    if workers <= 1:
        results = []
        for idx, seed in enumerate(seeds):
            try:
                results.append(run_trial(spec, seed, step_sizes, codes))
            except Exception as exc:
                raise fail(idx, exc) from exc
            if progress is not None:
                progress()
        return results
    results_by_idx: dict[int, dict[str, TrialMetrics]] = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(run_trial, spec, seed, step_sizes, codes): idx
            for idx, seed in enumerate(seeds)
        }
        for fut in as_completed(futures):
            idx = futures[fut]
            try:
                results_by_idx[idx] = fut.result()
            except Exception as exc:
                raise fail(idx, exc) from exc
            if progress is not None:
                progress()
    return [results_by_idx[i] for i in range(len(seeds))]


def _curve_rows(
    metrics: list[dict[str, TrialMetrics]],
    receivers: Sequence[str],
    k_users: int,
    field: str,
) -> list[list]:
    n_trials = len(metrics)
    per_receiver = {}
    for name in receivers:
        if field == "ber":
            stack = np.stack([m[name].bit_errors / (2.0 * k_users) for m in metrics])
        else:
            stack = np.stack([m[name].mse for m in metrics])
        mean = stack.mean(axis=0)
        if n_trials > 1:
            stderr = stack.std(axis=0, ddof=1) / np.sqrt(n_trials)
        else:
            stderr = np.zeros_like(mean)
        per_receiver[name] = (mean, stderr)
    rows: list[list] = []
    length = len(next(iter(per_receiver.values()))[0])
    for i in range(length):
        for name in receivers:
            mean, stderr = per_receiver[name]
            rows.append([i + 1, name, float(mean[i]), float(stderr[i])])
    return rows


def _sweep_rows(
    x_value,
    metrics: list[dict[str, TrialMetrics]],
    receivers: Sequence[str],
) -> list[list]:
    n_trials = len(metrics)
    rows = []
    for name in receivers:
        bers = np.array([m[name].ber_final for m in metrics])
        stderr = bers.std(ddof=1) / np.sqrt(n_trials) if n_trials > 1 else 0.0
        rows.append([x_value, name, float(bers.mean()), float(stderr), n_trials])
    return rows


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path,
    progress_cb: Callable[[int, int], None] | None = None,
) -> ExperimentResult:
    """Run a full experiment and write its CSV and manifest into ``out_dir``."""
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if config.experiment == "sweep-ebn0":
        points = [(float(x), _spec_from_config(config, config.k_users, x)) for x in config.ebn0_db]
    elif config.experiment == "sweep-users":
        points = [(int(x), _spec_from_config(config, x, config.ebn0_db)) for x in config.k_users]
    else:
        points = [(None, _spec_from_config(config, config.k_users, config.ebn0_db))]

    root = np.random.SeedSequence(config.master_seed)
    pilot_root, eval_root, codes_root = root.spawn(3)
    pilot_pts = pilot_root.spawn(len(points))
    eval_pts = eval_root.spawn(len(points))
    codes_pts = codes_root.spawn(len(points))

    pilots_per_receiver = {
        name: 0 if config.step_sizes[name].is_singleton
        else len(list(itertools.product(*[
            config.step_sizes[name].mu_w,
            config.step_sizes[name].mu_lambda,
            config.step_sizes[name].mu_h,
        ]))) * config.pilot_trials
        for name in config.receivers
    }
    total_units = len(points) * (sum(pilots_per_receiver.values()) + config.trials)
    done = 0

    def tick() -> None:
        nonlocal done
        done += 1
        if progress_cb is not None:
            progress_cb(done, total_units)

    chosen: dict[str, StepSizes] = {}
    rows: list[list] = []
    for idx, (x_value, spec) in enumerate(points):
        codes = None
        if config.fixed_codes:
            rng = np.random.default_rng(codes_pts[idx])
            codes = [generate_code(rng, spec.n) for _ in range(spec.k_users)]
        pilot_seeds = pilot_pts[idx].spawn(config.pilot_trials)
        steps: dict[str, StepSizes] = {}
        for name in config.receivers:
            grid = config.step_sizes[name]
            if grid.is_singleton:
                steps[name] = grid.single()
            else:
                steps[name] = optimize_step_sizes(spec, name, grid, pilot_seeds, codes, progress=tick)
            label = name if x_value is None else f"{name} x={x_value:g}"
            chosen[label] = steps[name]
        trial_seeds = eval_pts[idx].spawn(config.trials)
        metrics = _run_trials(spec, trial_seeds, steps, codes, config.workers, tick)
        if config.experiment in ("convergence", "channel-mse"):
            field = "ber" if config.experiment == "convergence" else "mse"
            rows.extend(_curve_rows(metrics, config.receivers, spec.k_users, field))
        else:
            rows.extend(_sweep_rows(x_value, metrics, config.receivers))

    if config.experiment == "convergence":
        columns = ["symbol_index", "receiver", "ber", "stderr"]
    elif config.experiment == "channel-mse":
        columns = ["symbol_index", "receiver", "mse", "stderr"]
    else:
        columns = ["x_value", "receiver", "ber", "stderr", "trials"]

    csv_path = write_csv(out_dir / _CSV_NAMES[config.experiment], columns, rows)
    manifest_path = write_manifest(out_dir / "manifest.txt", config, chosen)
    return ExperimentResult(
        experiment=config.experiment,
        columns=columns,
        rows=rows,
        chosen=chosen,
        csv_path=csv_path,
        manifest_path=manifest_path,
    )
