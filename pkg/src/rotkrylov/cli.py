"""Command-line entry point: ``rotkrylov {toy,grid,krylov,scan,project}``.

Exit codes: 0 success, 2 configuration or input error, 3 some grid cells failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .angles import optimize_theta_heuristic, optimize_theta_oracle, scan_overlap_spectrum
from .errors import ConfigError, NotHermitian, ParseError, RotKrylovError
from .experiment import (
    CONFIG_SCHEMA,
    ExperimentConfig,
    csv_text,
    fmt_value,
    resolve_source,
    run_grid,
    run_pipeline,
    toy_study,
    write_grid,
    write_toy,
)
from .krylov import ToyParams, build_subspace_pencil, load_matrix, matrix_to_json
from .pencil import solve_rotated
from .projection import nearest_physical_overlap

log = logging.getLogger("rotkrylov")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3


def parse_theta_mode(text: str) -> tuple[str, float | None]:
    """``none | oracle | heuristic | fixed:<radians>``."""
    if text in ("none", "oracle", "heuristic"):
        return text, None
    if text.startswith("fixed:"):
        try:
            return "fixed", float(text[len("fixed:"):])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"invalid theta mode {text!r}; use none, oracle, heuristic or fixed:<radians>")


MODE_METHOD = {"none": None, "oracle": "rotated_oracle", "heuristic": "rotated_heuristic", "fixed": "rotated_fixed"}


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = replace(cfg, master_seed=args.seed)
    if args.theta_mode is not None:
        mode, theta = args.theta_mode
        methods = ["naive"] + ([MODE_METHOD[mode]] if MODE_METHOD[mode] else [])
        cfg = replace(cfg, methods=methods, theta_fixed=theta if theta is not None else cfg.theta_fixed)
    return cfg


def _theta_for(mode, theta, cfg, source, result, tau) -> float:
    if mode == "oracle":
        return optimize_theta_oracle(result.aggregate, tau, source.reference, cfg.angle_search).theta
    if mode == "heuristic":
        return optimize_theta_heuristic(result.batches, tau, cfg.angle_search).theta
    if mode == "fixed":
        return theta
    return 0.0


def cmd_toy(args) -> int:
    cfg = _load_config(args)
    spec = dict(cfg.model)
    if spec.pop("kind") != "toy":
        raise ConfigError("the toy command needs a toy model config")
    study = toy_study(ToyParams(**spec), tau=args.tau, noise_std=args.noise_std, seeds=args.seeds,
                      master_seed=cfg.master_seed, angle_cfg=cfg.angle_search)
    paths = write_toy(study, args.out)
    for r in study.noiseless.values():
        print(f"{r.method:15s} theta={r.theta:.6f} estimate={r.estimate:.12g} abs_error={r.abs_error:.3e} "
              f"kept_dim={r.kept_dim}")
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = _load_config(args)
    grid = run_grid(cfg, threads=args.threads)
    paths = write_grid(grid, args.out, cfg)
    print(f"{len(grid.records)} records, {len(grid.failures)} failed; wrote {paths['grid.csv'].parent}")
    return EXIT_PARTIAL if grid.failures else EXIT_OK


def cmd_krylov(args) -> int:
    cfg = _load_config(args)
    mode, theta_fixed = args.theta_mode or ("none", None)
    source = resolve_source(cfg)
    nu, tau = cfg.noise_levels[0], cfg.taus[0]
    result = run_pipeline(cfg, source, 0, nu, tau, 0)
    theta = _theta_for(mode, theta_fixed, cfg, source, result, tau)
    sol = solve_rotated(result.aggregate, theta, tau)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [[str(r.dim)] + [fmt_value(float(x)) for x in (r.mu0_bar, r.sigma, r.epsilon)] + [str(r.n_failed)]
            for r in result.history]
    (out / "history.csv").write_text(csv_text(["dim", "mu0_bar", "sigma", "epsilon", "n_failed"], rows))
    summary = {
        "noise_level": nu,
        "tau": tau,
        "theta_mode": mode,
        "theta": theta,
        "estimate": float(sol.ground),
        "reference": float(source.reference),
        "abs_error": float(abs(sol.ground - source.reference)),
        "kept_dim": int(sol.kept_dim),
        "converged_dim": int(result.converged_dim),
        "converged": bool(result.converged),
        "stop_reason": result.stop_reason,
        "mu0_bar": float(result.mu0_bar),
        "sigma": float(result.sigma),
    }
    (out / "result.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = _load_config(args)
    source = resolve_source(cfg)
    pencil = source.toy if source.toy is not None else build_subspace_pencil(
        source.model, source.krylov, source.krylov.max_dim + 1)
    n = cfg.angle_search.grid_points
    thetas = np.arange(n) * (np.pi / n)
    tau = args.tau if args.tau is not None else cfg.taus[0]
    rows = []
    for t, vals in scan_overlap_spectrum(pencil, thetas):
        try:
            sol = solve_rotated(pencil, t, tau)
            ground, kept = sol.ground, sol.kept_dim
        except RotKrylovError:
            ground, kept = float("nan"), 0
        rows.append([fmt_value(t)] + [fmt_value(float(v)) for v in vals] + [fmt_value(float(ground)), str(kept)])
    header = ["theta"] + [f"s_eig_{k}" for k in range(pencil.dim)] + ["ground", "kept_dim"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scan.csv").write_text(csv_text(header, rows))
    print(f"wrote {out / 'scan.csv'} ({len(rows)} angles, tau={tau})")
    return EXIT_OK


def cmd_project(args) -> int:
    s = load_matrix(args.input)
    rep = nearest_physical_overlap(s, max_iter=args.max_iter, tol=args.tol)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(matrix_to_json(rep.projected) + "\n")
    report = {"frobenius_distance": rep.frobenius_distance, "iterations": rep.iterations,
              "converged": bool(rep.converged)}
    out.with_suffix(".report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config (see --print-schema)")
    common.add_argument("--seed", type=int, help="64-bit master seed, overrides the config")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument("--theta-mode", type=parse_theta_mode, metavar="MODE",
                        help="none, oracle, heuristic or fixed:<radians>")
    common.add_argument("--threads", type=int, default=1, help="worker threads for grid cells")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rotkrylov", description="Rotated-thresholding Krylov experiments.")
    parser.add_argument("--print-schema", action="store_true", help="print the config JSON schema and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("toy", parents=[common], help="three-state toy model tables")
    p.add_argument("--tau", type=float, default=1.05)
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--seeds", type=int, default=200)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("grid", parents=[common], help="noise level x tau grid over methods")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("krylov", parents=[common], help="one pipeline run with its full history")
    p.set_defaults(func=cmd_krylov)

    p = sub.add_parser("scan", parents=[common], help="rotated-overlap spectrum versus theta")
    p.add_argument("--tau", type=float, default=None, help="threshold for the ground column (default: first config tau)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("project", parents=[common], help="nearest physical overlap of a matrix file")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_project)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ParseError, NotHermitian) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
