"""Command-line front end.

Subcommands:

* ``run``                -- run every algorithm in a config, write one
  learning-curve CSV per label plus ``summary.json``.
* ``estimate-variance``  -- run the config's bcsm_estimated algorithm and
  write the per-iteration variance estimate next to the injected truth.
* ``presets``            -- list or show the bundled experiment configs.

Exit codes: 0 ok, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    ConfigError,
    ExperimentConfig,
    effective_parameters,
    load_config,
    preset_description,
    preset_names,
    preset_text,
    resolve_config_source,
)
from .harness import LearningCurve, run_ensemble, write_learning_curve_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcsm-nlms",
        description="Set-membership NLMS benchmarks with bias compensation "
        "for noisy inputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument(
            "--config", required=True, metavar="PATH",
            help="config file path or bundled preset name",
        )
        p.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides config)")
        p.add_argument("--trials", type=int, metavar="N", help="trial count (overrides config)")
        p.add_argument(
            "--workers", type=int, default=1, metavar="N",
            help="trial-level worker processes (default 1; results identical)",
        )
        p.add_argument(
            "--engine", choices=("auto", "fast", "reference"), default="auto",
            help="trial engine (default auto: compiled loop when numba is present)",
        )

    p_run = sub.add_parser("run", help="run all algorithms in a config")
    add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_est = sub.add_parser(
        "estimate-variance",
        help="track the regression-noise variance estimate over a run",
    )
    add_run_flags(p_est)
    p_est.set_defaults(func=cmd_estimate_variance)

    p_presets = sub.add_parser("presets", help="list or show bundled configs")
    p_presets.add_argument("action", choices=("list", "show"))
    p_presets.add_argument("name", nargs="?", help="preset name (for 'show')")
    p_presets.set_defaults(func=cmd_presets)
    return parser


def _load(args) -> ExperimentConfig:
    source = resolve_config_source(args.config)
    return load_config(source, seed=args.seed, trials=args.trials, output_dir=args.out)


def _curve_summary(curve: LearningCurve) -> dict:
    entry = {
        "steady_state_db": curve.steady_state_db,
        "final_nmsd_db": float(curve.nmsd_db[-1]),
        "update_ratio": curve.update_ratio,
        "trials": curve.trials,
        "sigma_eta_true": curve.sigma_eta_true,
        "sigma_v_true": curve.sigma_v_true,
    }
    if curve.sigma_eta_hat is not None:
        entry["final_sigma_eta_hat"] = float(curve.sigma_eta_hat[-1])
    return entry


def _write_summary(path: Path, cfg: ExperimentConfig, results: dict) -> None:
    payload = {"config": effective_parameters(cfg), "results": results}
    path.write_text(json.dumps(payload, indent=2) + "\n")


def cmd_run(args) -> int:
    cfg = _load(args)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    for labeled in cfg.algorithms:
        curve = run_ensemble(
            cfg.scenario,
            labeled.spec,
            cfg.trials,
            engine=args.engine,
            workers=args.workers,
        )
        csv_path = out / f"{labeled.label}.csv"
        write_learning_curve_csv(csv_path, curve)
        results[labeled.label] = _curve_summary(curve)
        print(
            f"{labeled.label}: steady-state {curve.steady_state_db:.2f} dB, "
            f"update ratio {curve.update_ratio:.3f} -> {csv_path}"
        )
    _write_summary(out / "summary.json", cfg, results)
    print(f"summary -> {out / 'summary.json'}")
    return EXIT_OK


def cmd_estimate_variance(args) -> int:
    cfg = _load(args)
    estimated = [a for a in cfg.algorithms if a.spec.kind == "bcsm_estimated"]
    if not estimated:
        raise ConfigError("algorithms: no bcsm_estimated entry to track")
    labeled = estimated[0]
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    curve = run_ensemble(
        cfg.scenario,
        labeled.spec,
        cfg.trials,
        engine=args.engine,
        workers=args.workers,
    )
    csv_path = out / "variance_estimate.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write("iteration,sigma_eta_hat,sigma_eta_true\n")
        for i, s in enumerate(curve.sigma_eta_hat):
            fh.write(f"{i},{s:.17g},{curve.sigma_eta_true:.17g}\n")
    results = {labeled.label: _curve_summary(curve)}
    _write_summary(out / "summary.json", cfg, results)
    final = float(curve.sigma_eta_hat[-1])
    print(
        f"{labeled.label}: final sigma_eta^2 estimate {final:.6g} "
        f"(injected {curve.sigma_eta_true:.6g}) -> {csv_path}"
    )
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(f"{name:24s} {preset_description(name)}")
        return EXIT_OK
    if not args.name:
        raise ConfigError("presets show: preset name required")
    print(preset_text(args.name), end="")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
