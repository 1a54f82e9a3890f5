"""Choice of the pencil rotation angle.

Two objectives share one search: a coarse uniform grid over [0, pi)
followed by golden-section refinement inside the best grid cell.

* oracle: distance of the aggregate ground energy to a known reference.
* heuristic: variance of the per-batch ground energies (needs no reference).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AllAnglesEmpty, DegenerateNormalization, EmptySubspace, InsufficientBatches
from .noise import BatchSet, aggregate_pencil, batch_ground_energies, weighted_mean_and_sigma
from .pencil import MatrixPencil, batched_ground, eigh, ground_sensitivity, rotate_pencil, solve_rotated

GOLDEN = (np.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class AngleSearchConfig:
    grid_points: int = 181
    refine_iters: int = 40
    tie_rtol: float = 1e-9

    def __post_init__(self):
        if self.grid_points < 8:
            raise ValueError("grid_points must be at least 8")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be nonnegative")


@dataclass(frozen=True)
class AngleResult:
    theta: float
    objective: float
    kept_dims: np.ndarray
    scan_table: list[tuple[float, float, int]] = field(repr=False)


def scan_overlap_spectrum(p: MatrixPencil, thetas) -> list[tuple[float, np.ndarray]]:
    """Ascending eigenvalues of the rotated overlap at each angle."""
    return [(float(t), eigh(rotate_pencil(p, t).s)[0]) for t in thetas]


def _golden_section(f: Callable[[float], float], lo: float, hi: float, iters: int):
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _search(evaluate, cfg: AngleSearchConfig, atol: float, secondary=None, evaluate_grid=None) -> AngleResult:
    """Coarse grid, tie-break, then golden-section refinement around the winner.

    ``evaluate(theta) -> (objective, kept_dims)``; ``evaluate_grid(thetas)``
    is an optional vectorized version used for the coarse grid.
    ``secondary(theta)`` orders tied grid angles when theta = 0 is not tied.
    """
    step = np.pi / cfg.grid_points
    grid = np.arange(cfg.grid_points) * step
    cache: dict[float, tuple[float, np.ndarray]] = {}

    def run(theta):
        if theta not in cache:
            cache[theta] = evaluate(theta)
        return cache[theta]

    if evaluate_grid is not None:
        for t, obj, kept in zip(grid, *evaluate_grid(grid)):
            cache[float(t)] = (float(obj), kept)
        # theta = 0 through the scalar path, bit-identical to the unrotated solve
        cache[0.0] = evaluate(0.0)
    table = []
    for t in grid:
        obj, kept = run(float(t))
        table.append((float(t), obj, kept))
    objs = np.array([row[1] for row in table])
    if not np.isfinite(objs).any():
        raise AllAnglesEmpty("thresholding is empty or degenerate at every grid angle")
    best = objs.min()
    tol = atol + cfg.tie_rtol * abs(best)
    tied = np.flatnonzero(objs <= best + tol)
    if tied[0] == 0:
        i = 0
    elif secondary is not None and len(tied) > 1:
        i = min(tied, key=lambda k: (secondary(grid[k]), k))
    else:
        i = int(tied[0])
    theta, obj, kept = table[i]

    if cfg.refine_iters:
        # the objective is pi-periodic, so the bracket may cross 0
        t_ref, _ = _golden_section(lambda t: run(t)[0], theta - step, theta + step, cfg.refine_iters)
        for t in sorted(cache):
            if t not in grid:
                table.append((t % np.pi, cache[t][0], cache[t][1]))
        obj_ref, kept_ref = run(t_ref)
        if obj_ref < obj - tol:
            theta, obj, kept = t_ref % np.pi, obj_ref, kept_ref

    scan = [(t, o, _modal(k)) for t, o, k in table]
    return AngleResult(float(theta), float(obj), np.atleast_1d(kept), scan)


def _modal(kept) -> int:
    kept = np.atleast_1d(kept)
    return int(Counter(kept.tolist()).most_common(1)[0][0])


def oracle_objective(p: MatrixPencil, tau: float, e_ref: float, theta: float) -> tuple[float, int]:
    """``|ground(theta) - e_ref|``; +inf when nothing finite survives."""
    try:
        sol = solve_rotated(p, theta, tau)
    except EmptySubspace:
        return np.inf, 0
    if sol.values.size == 0:
        return np.inf, sol.kept_dim
    return abs(sol.ground - e_ref), sol.kept_dim


def optimize_theta_oracle(batches, tau: float, e_ref: float, cfg: AngleSearchConfig = AngleSearchConfig()) -> AngleResult:
    """Angle minimizing the aggregate ground-energy error against ``e_ref``.

    ``batches`` is a BatchSet (its aggregate pencil is used) or a single
    pencil.  Among grid angles tied at the optimum, theta = 0 wins if present,
    otherwise the one whose ground Ritz vector is least sensitive
    (smallest overlap-normalized norm).
    """
    p = aggregate_pencil(batches) if isinstance(batches, BatchSet) else batches
    if not np.isfinite(e_ref):
        raise ValueError("e_ref must be finite")

    def evaluate(theta):
        obj, kept = oracle_objective(p, tau, e_ref, theta)
        return obj, np.array([kept])

    def evaluate_grid(thetas):
        ground, kept = batched_ground(p.h[None], p.s[None], thetas, tau)
        objs = np.abs(ground[:, 0] - e_ref)
        return np.where(np.isnan(objs), np.inf, objs), kept

    def sensitivity(theta):
        try:
            return ground_sensitivity(p, tau, theta)
        except (EmptySubspace, DegenerateNormalization):
            return np.inf

    atol = 1e-10 * max(1.0, abs(e_ref))
    return _search(evaluate, cfg, atol, secondary=sensitivity, evaluate_grid=evaluate_grid)


def _variance(energies: np.ndarray, weights: np.ndarray) -> float:
    try:
        return weighted_mean_and_sigma(energies, weights)[1] ** 2
    except InsufficientBatches:
        return np.inf


def heuristic_objective(batches: BatchSet, tau: float, theta: float) -> tuple[float, np.ndarray]:
    """Variance of the per-batch ground energies at ``theta``."""
    energies, kept = batch_ground_energies(batches, tau, theta, return_kept=True)
    return _variance(energies, batches.weights), kept


def optimize_theta_heuristic(batches: BatchSet, tau: float, cfg: AngleSearchConfig = AngleSearchConfig()) -> AngleResult:
    """Angle minimizing the inter-batch variance of the ground energy.

    Only angles that keep at least as many overlap directions in total over
    the batches as the unrotated solve are candidates, since rotation is
    meant to rescue states from thresholding, not to drop extra ones.  Ties
    go to the smallest angle.  Never sees a reference energy.
    """
    if batches.n < 2:
        raise InsufficientBatches("heuristic needs at least 2 batches")
    base_kept = batched_ground(batches.h, batches.s, 0.0, tau)[1].sum()

    def evaluate(theta):
        obj, kept = heuristic_objective(batches, tau, theta)
        return (obj if kept.sum() >= base_kept else np.inf), kept

    def evaluate_grid(thetas):
        ground, kept = batched_ground(batches.h, batches.s, thetas, tau)
        objs = np.array([_variance(g, batches.weights) for g in ground])
        return np.where(kept.sum(axis=1) >= base_kept, objs, np.inf), list(kept)

    return _search(evaluate, cfg, atol=0.0, evaluate_grid=evaluate_grid)
