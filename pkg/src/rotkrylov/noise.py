"""Gaussian measurement-noise simulation, batch statistics and noise-aware
Krylov basis growth."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientBatches
from .krylov import HamiltonianModel, KrylovConfig, build_subspace_pencil
from .pencil import MatrixPencil, batched_ground
from .projection import project_stack

log = logging.getLogger(__name__)


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under a 64-bit master seed.

    The mixing function is numpy's ``SeedSequence(seed, spawn_key=key)``, so a
    stream depends only on (seed, key) and never on evaluation order.
    """
    ss = np.random.SeedSequence(int(seed) % 2**64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class NoiseConfig:
    level: float
    n_batches: int = 100
    per_batch: int = 1250
    seed: int = 0
    literal: bool = False  # materialize all per_batch draws instead of one draw of variance level/per_batch

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be nonnegative")
        if self.n_batches < 2 or self.per_batch < 1:
            raise ValueError("need n_batches >= 2 and per_batch >= 1")

    @property
    def total(self) -> int:
        return self.n_batches * self.per_batch


@dataclass(frozen=True)
class ConvergenceConfig:
    gamma: float = 1.0
    hard_floor: float = 1e-4
    max_iterations: int = 34

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


@dataclass(frozen=True)
class BatchSet:
    """Batch-averaged pencils stacked as ``h``/``s`` arrays of shape ``(n, d, d)``.

    Overlaps are already projected onto physical overlap matrices.
    """

    h: np.ndarray
    s: np.ndarray
    weights: np.ndarray
    noise: NoiseConfig
    projection_converged: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @property
    def dim(self) -> int:
        return self.h.shape[-1]

    @property
    def pencils(self) -> list[MatrixPencil]:
        return [MatrixPencil(h, s) for h, s in zip(self.h, self.s)]


@dataclass(frozen=True)
class IterationRecord:
    dim: int
    mu0_bar: float
    sigma: float
    epsilon: float
    n_failed: int


@dataclass
class PipelineResult:
    converged_dim: int
    mu0_bar: float
    sigma: float
    batches: BatchSet
    history: list[IterationRecord]
    converged: bool
    stop_reason: str
    aggregate: MatrixPencil | None = None


def hermitian_noise(rng: np.random.Generator, dim: int, variance: float, size=()) -> np.ndarray:
    """Hermitian Gaussian matrices with per-element variance ``variance``.

    Off-diagonal real and imaginary parts are N(0, variance/2) each; the
    diagonal is real N(0, variance).  Only the upper triangle is drawn.
    """
    size = tuple(np.atleast_1d(size)) if size != () else ()
    iu = np.triu_indices(dim, 1)
    m = len(iu[0])
    std_off = np.sqrt(variance / 2)
    off = rng.normal(0.0, std_off, size + (m,)) + 1j * rng.normal(0.0, std_off, size + (m,))
    diag = rng.normal(0.0, np.sqrt(variance), size + (dim,))
    e = np.zeros(size + (dim, dim), dtype=complex)
    e[..., iu[0], iu[1]] = off
    e[..., iu[1], iu[0]] = off.conj()
    idx = np.arange(dim)
    e[..., idx, idx] = diag
    return e


def sample_noisy_pencil(truth: MatrixPencil, variance: float, rng: np.random.Generator) -> MatrixPencil:
    """``(H + E, S + F)`` with independent Hermitian Gaussian noise on H and S."""
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if variance == 0:
        return truth
    e = hermitian_noise(rng, truth.dim, variance)
    f = hermitian_noise(rng, truth.dim, variance)
    return MatrixPencil(truth.h + e, truth.s + f)


def _raw_batches(truth: MatrixPencil, cfg: NoiseConfig, key: tuple) -> tuple[np.ndarray, np.ndarray]:
    n, d = cfg.n_batches, truth.dim
    h = np.broadcast_to(truth.h, (n, d, d)).astype(complex)
    s = np.broadcast_to(truth.s, (n, d, d)).astype(complex)
    if cfg.level == 0:
        return h, s
    for q in range(n):
        rng = rng_stream(cfg.seed, *key, q)
        if cfg.literal:
            e = hermitian_noise(rng, d, cfg.level, size=cfg.per_batch)
            f = hermitian_noise(rng, d, cfg.level, size=cfg.per_batch)
            h[q] += e.mean(axis=0)
            s[q] += f.mean(axis=0)
        else:
            var = cfg.level / cfg.per_batch
            h[q] += hermitian_noise(rng, d, var)
            s[q] += hermitian_noise(rng, d, var)
    return h, s


def batch_averages(truth: MatrixPencil, cfg: NoiseConfig, key: tuple = ()) -> BatchSet:
    """Simulate ``n_batches`` batch-averaged measurements of ``truth``.

    Batch ``q`` draws from ``rng_stream(cfg.seed, *key, q)``; each averaged
    overlap is then replaced by its nearest physical overlap matrix.
    """
    h, s = _raw_batches(truth, cfg, tuple(key))
    s, _, converged = project_stack(s)
    if not np.all(converged):
        log.warning("%d batch overlaps did not converge in projection", np.count_nonzero(~converged))
    return BatchSet(h, s, np.ones(cfg.n_batches), cfg, converged)


def batch_ground_energies(batches: BatchSet, tau: float, theta: float = 0.0, return_kept: bool = False):
    """Ground energy of every batch pencil after rotation by ``theta`` and thresholding.

    Batches where thresholding leaves nothing get NaN.
    """
    ground, kept = batched_ground(batches.h, batches.s, theta, tau)
    if return_kept:
        return ground, kept
    return ground


def weighted_mean_and_sigma(energies, weights) -> tuple[float, float]:
    """Weighted global mean and the spread of the batch energies around it.

    NaN energies (failed batches) are dropped and the remaining weights are
    rescaled to sum to the number of surviving batches.
    """
    energies = np.asarray(energies, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if energies.shape != weights.shape:
        raise ValueError("energies and weights differ in length")
    ok = ~np.isnan(energies)
    if ok.sum() < len(energies):
        log.info("dropping %d failed batches from statistics", len(energies) - ok.sum())
    energies, weights = energies[ok], weights[ok]
    n = len(energies)
    if n < 2:
        raise InsufficientBatches(f"need at least 2 usable batches, got {n}")
    weights = weights * (n / weights.sum())
    # shifting by one sample keeps identical energies at exactly zero spread
    shift = energies[0]
    mu = float(shift + np.sum(weights * (energies - shift)) / n)
    sigma = float(np.sqrt(np.mean((energies - mu) ** 2)))
    return mu, sigma


def convergence_epsilon(sigma_j: float, sigma_jm1: float, gamma: float) -> float:
    return gamma * max(sigma_j, sigma_jm1)


def aggregate_pencil(batches: BatchSet) -> MatrixPencil:
    """Weighted average of all batch pencils; the overlap is projected again."""
    w = batches.weights * (batches.n / batches.weights.sum())
    h = np.einsum("q,qij->ij", w, batches.h) / batches.n
    s = np.einsum("q,qij->ij", w, batches.s) / batches.n
    s, _, _ = project_stack(s)
    return MatrixPencil(h, s)


def iterative_basis_construction(
    model: HamiltonianModel,
    kcfg: KrylovConfig,
    ncfg: NoiseConfig,
    ccfg: ConvergenceConfig = ConvergenceConfig(),
    tau: float = 0.0,
    key: tuple = (),
) -> PipelineResult:
    """Grow the Krylov basis one state at a time until the energy change is
    below the noise-aware tolerance or the hard floor.

    Every iteration rebuilds the noiseless pencil, draws fresh batches from
    ``(ncfg.seed, *key, dim, batch)`` and solves each batch with naive
    thresholding at ``tau``.
    """
    history: list[IterationRecord] = []
    prev_mu = prev_sigma = None
    batches = None
    stop_reason = "max_dim"
    converged = False
    last_j = min(ccfg.max_iterations, kcfg.max_dim)
    for j in range(1, last_j + 1):
        d = j + 1
        truth = build_subspace_pencil(model, kcfg, d)
        batches = batch_averages(truth, ncfg, key=(*key, d))
        energies = batch_ground_energies(batches, tau, 0.0)
        mu, sigma = weighted_mean_and_sigma(energies, batches.weights)
        n_failed = int(np.count_nonzero(np.isnan(energies)))
        if prev_mu is None:
            history.append(IterationRecord(d, mu, sigma, float("nan"), n_failed))
            prev_mu, prev_sigma = mu, sigma
            continue
        eps = convergence_epsilon(sigma, prev_sigma, ccfg.gamma)
        history.append(IterationRecord(d, mu, sigma, eps, n_failed))
        change = abs(mu - prev_mu)
        if change < eps:
            stop_reason, converged = "statistical", True
            break
        if change < ccfg.hard_floor:
            stop_reason, converged = "hard_floor", True
            break
        prev_mu, prev_sigma = mu, sigma
    if not converged:
        log.info("basis construction reached dim %d without meeting a stop rule", batches.dim)
    final = history[-1]
    return PipelineResult(
        converged_dim=batches.dim,
        mu0_bar=final.mu0_bar,
        sigma=final.sigma,
        batches=batches,
        history=history,
        converged=converged,
        stop_reason=stop_reason,
    )
