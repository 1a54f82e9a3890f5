"""Iterative subspace growth on a random Hamiltonian at several noise levels,
printing the per-dimension ground estimate, spread and stopping reason."""

import argparse

import numpy as np

from rotkrylov.krylov import KrylovConfig, default_psi0, random_hamiltonian, select_dt
from rotkrylov.noise import ConvergenceConfig, NoiseConfig, iterative_basis_construction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=20)
    ap.add_argument("--model-seed", type=int, default=0)
    ap.add_argument("--max-dim", type=int, default=15)
    ap.add_argument("--levels", type=float, nargs="+", default=[0.0, 1e-8, 1e-6, 1e-4])
    ap.add_argument("--tau", type=float, default=None, help="threshold (default: level, or 1e-12 if noiseless)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    model = random_hamiltonian(args.dim, args.model_seed)
    kcfg = KrylovConfig(select_dt(model), args.max_dim, default_psi0(model))
    lam0 = model.ground_energy
    print(f"exact ground energy {lam0:.10f}")
    for level in args.levels:
        tau = args.tau if args.tau is not None else max(level, 1e-12)
        res = iterative_basis_construction(model, kcfg, NoiseConfig(level, seed=args.seed), ConvergenceConfig(), tau)
        print(f"\nnoise {level:.0e}, tau {tau:.0e}: stop={res.stop_reason} at d={res.converged_dim}, "
              f"error={abs(res.mu0_bar - lam0):.3e}")
        for r in res.history:
            eps = "" if np.isnan(r.epsilon) else f"{r.epsilon:.2e}"
            print(f"  d={r.dim:3d} mu={r.mu0_bar:.10f} sigma={r.sigma:.2e} eps={eps}")


if __name__ == "__main__":
    main()
