"""Command line interface.

``cdma-jic run`` executes an experiment described by a config file and
drops the CSV and manifest into the output directory.  With ``--server``
it becomes a thin client: the parsed config is posted to a running
service, polled until done, and the produced files are downloaded
byte-identical into the output directory.  ``cdma-jic serve`` starts the
service.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import httpx

from cdma_jic.harness.config import ConfigError, ExperimentConfig, parse_config_file
from cdma_jic.harness.runner import run_experiment

_POLL_SECONDS = 0.2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdma-jic", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("--config", required=True, help="path to the experiment config")
    run_p.add_argument("--seed", type=int, default=None, help="override master_seed")
    run_p.add_argument("--trials", type=int, default=None, help="override trial count")
    run_p.add_argument("--out", default="out", help="output directory (default: out)")
    run_p.add_argument(
        "--experiment",
        choices=["convergence", "channel-mse", "sweep-ebn0", "sweep-users"],
        default=None,
        help="override the experiment kind",
    )
    run_p.add_argument(
        "--full-scale",
        action="store_true",
        help="run the full reference profile (trials = 100)",
    )
    run_p.add_argument("--server", default=None, help="run remotely against this service URL")
    run_p.add_argument("--workers", type=int, default=None, help="override worker processes")

    serve_p = sub.add_parser("serve", help="start the experiment service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.add_argument("--out-root", default=None, help="directory for job outputs")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    if args.experiment is not None:
        cfg.experiment = args.experiment
    if args.full_scale:
        cfg.trials = 100
    if args.workers is not None:
        cfg.workers = args.workers
    cfg.validate()
    return cfg


def _request_payload(cfg: ExperimentConfig) -> dict:
    payload = {
        "experiment": cfg.experiment,
        "n": cfg.n,
        "lp": cfg.lp,
        "k_users": cfg.k_users,
        "ebn0_db": cfg.ebn0_db,
        "packet_len": cfg.packet_len,
        "training_len": cfg.training_len,
        "trials": cfg.trials,
        "receivers": cfg.receivers,
        "pic_stages": cfg.pic_stages,
        "master_seed": cfg.master_seed,
        "nonzero_paths": cfg.nonzero_paths,
        "power_std_db": cfg.power_std_db,
        "rho": cfg.rho,
        "pilot_trials": cfg.pilot_trials,
        "workers": cfg.workers,
        "fixed_codes": cfg.fixed_codes,
        "pin_first_tap": cfg.pin_first_tap,
        "freeze_after_training": cfg.freeze_after_training,
        "step_sizes": {
            name: {
                "mu_w": list(grid.mu_w),
                "mu_lambda": list(grid.mu_lambda),
                "mu_h": list(grid.mu_h),
            }
            for name, grid in cfg.step_sizes.items()
            if name in cfg.receivers
        },
    }
    return payload


def _run_local(cfg: ExperimentConfig, out_dir: Path) -> int:
    last = {"printed": -1}

    def progress(done: int, total: int) -> None:
        if done == total or done - last["printed"] >= max(1, total // 20):
            last["printed"] = done
            print(f"progress: {done}/{total} trials")

    result = run_experiment(cfg, out_dir, progress_cb=progress)
    for label, steps in result.chosen.items():
        print(
            f"steps[{label}]: mu_w={steps.mu_w:g} mu_lambda={steps.mu_lambda:g} mu_h={steps.mu_h:g}"
        )
    for path in result.files:
        print(f"wrote {path}")
    return 0


def _run_remote(cfg: ExperimentConfig, out_dir: Path, server: str, client: httpx.Client | None = None) -> int:
    own_client = client is None
    if client is None:
        client = httpx.Client(base_url=server, timeout=30.0)
    try:
        resp = client.post("/experiments", json=_request_payload(cfg))
        if resp.status_code >= 400:
            print(f"error: server rejected the experiment: {resp.text}", file=sys.stderr)
            return 1
        job_id = resp.json()["job_id"]
        print(f"submitted job {job_id}")
        while True:
            info = client.get(f"/experiments/{job_id}").json()
            if info["status"] == "done":
                break
            if info["status"] == "failed":
                print(f"error: job failed: {info['error']}", file=sys.stderr)
                return 1
            time.sleep(_POLL_SECONDS)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in client.get(f"/experiments/{job_id}/files").json():
            data = client.get(f"/experiments/{job_id}/files/{name}").content
            target = out_dir / name
            target.write_bytes(data)
            print(f"wrote {target}")
        return 0
    finally:
        if own_client:
            client.close()


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from cdma_jic.service.app import create_app

        uvicorn.run(create_app(args.out_root), host=args.host, port=args.port)
        return 0

    try:
        cfg = parse_config_file(args.config)
        cfg = _apply_overrides(cfg, args)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    if args.server:
        return _run_remote(cfg, out_dir, args.server)
    return _run_local(cfg, out_dir)


if __name__ == "__main__":
    raise SystemExit(main())
