"""Paired comparison of naive thresholding and the two rotated methods over
the noise x threshold grid, for one or more toy overlap parameters."""

import argparse

import numpy as np

from rotkrylov.experiment import ExperimentConfig, run_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, nargs="+", default=[0.9, 0.99])
    ap.add_argument("--replicates", type=int, default=50)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    for s in args.s:
        cfg = ExperimentConfig(model={"kind": "toy", "s": s}, replicates=args.replicates,
                               methods=["naive", "rotated_oracle", "rotated_heuristic"])
        grid = run_grid(cfg, threads=args.threads)
        errs = {}
        for r in grid.ok():
            errs.setdefault((r.noise_level, r.tau), {}).setdefault(r.method, []).append(r.abs_error)
        print(f"\ns = {s}  ({args.replicates} seeds per cell, {len(grid.failures)} failed records)")
        print(f"{'noise':>8s} {'tau':>8s} {'naive':>10s} {'oracle':>10s} {'heuristic':>10s} {'heur/naive':>11s}")
        for (nu, tau), m in sorted(errs.items()):
            med = {k: float(np.median(v)) for k, v in m.items()}
            print(f"{nu:8.0e} {tau:8.0e} {med['naive']:10.3e} {med['rotated_oracle']:10.3e} "
                  f"{med['rotated_heuristic']:10.3e} {med['rotated_heuristic'] / med['naive']:11.6f}")


if __name__ == "__main__":
    main()
