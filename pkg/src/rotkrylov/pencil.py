"""Thresholded and rotated solvers for Hermitian matrix pencils.

A pencil ``(H, S)`` defines ``H v = mu S v``.  Thresholding (canonical
orthogonalization) keeps only the eigen-directions of ``S`` whose eigenvalue
magnitude is at least ``tau``.  Rotating the pencil by an angle ``theta``
mixes ``H`` and ``S`` without changing the eigenvectors, so it changes *which*
directions survive the threshold; eigenvalues are mapped back afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AtInfinity,
    DegenerateNormalization,
    DimensionMismatch,
    EigenDecompositionError,
    EmptySubspace,
    NotHermitian,
    NotPositiveDefinite,
)

HERMITIAN_ATOL = 1e-12
POLE_TOL = 1e-12
NORMALIZATION_FLOOR = 1e-12
# relative imaginary part above which a reduced eigenvalue counts as non-real
COMPLEX_RTOL = 1e-8


def hermitian(a, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate ``a`` as Hermitian and return an exactly Hermitian read-only copy."""
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    asym = np.max(np.abs(a - a.conj().T))
    if asym > atol * max(1.0, np.max(np.abs(a))):
        raise NotHermitian(asym)
    a = 0.5 * (a + a.conj().T)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MatrixPencil:
    """The pair ``(h, s)``; both matrices are stored exactly Hermitian."""

    h: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        h = hermitian(self.h)
        s = hermitian(self.s)
        if h.shape != s.shape:
            raise DimensionMismatch(f"pencil dims differ: {h.shape} vs {s.shape}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "s", s)

    @property
    def dim(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class EigenRay:
    """Projective representation ``mu = alpha / beta`` of a generalized eigenvalue."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("(alpha, beta) must not both vanish")

    @classmethod
    def from_value(cls, mu: float) -> "EigenRay":
        return cls(float(mu), 1.0)

    def rotate(self, theta: float) -> "EigenRay":
        c, s = np.cos(theta), np.sin(theta)
        return EigenRay(self.alpha * c - self.beta * s, self.beta * c + self.alpha * s)

    @property
    def value(self) -> float:
        if abs(self.beta) <= POLE_TOL * max(1.0, abs(self.alpha)):
            raise AtInfinity(f"ray ({self.alpha}, {self.beta}) is at infinity")
        return self.alpha / self.beta


@dataclass(frozen=True)
class RitzSolution:
    """Ritz values (ascending) and unit-norm Ritz vectors as columns of ``vectors``.

    ``kept_dim`` is the dimension of the subspace that survived thresholding.
    Values that were mapped to infinity by the back-transform (``n_infinite``)
    or came out non-real from an indefinite reduced problem (``n_complex``)
    are dropped, so ``len(values) == kept_dim - n_infinite - n_complex``.
    """

    values: np.ndarray
    vectors: np.ndarray
    kept_dim: int
    theta: float = 0.0
    tau: float = 0.0
    n_infinite: int = 0
    n_complex: int = 0

    @property
    def ground(self) -> float:
        if self.values.size == 0:
            raise EmptySubspace("no finite Ritz values")
        return float(self.values[0])

    @property
    def ground_vector(self) -> np.ndarray:
        return self.vectors[:, 0]


def eigh(a) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of a Hermitian matrix."""
    a = np.asarray(a)
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(a.shape[-1], exc) from exc


def _keep_mask(lam: np.ndarray, tau: float) -> np.ndarray:
    # exactly-singular directions are never kept, even at tau = 0
    mag = np.abs(lam)
    floor = lam.shape[-1] * np.finfo(float).eps * np.max(mag, axis=-1, keepdims=True)
    return (mag >= tau) & (mag > floor)


def _whiten(s: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    lam, u = eigh(s)
    keep = _keep_mask(lam, tau)
    lam = lam[keep]
    return u[:, keep] / np.sqrt(np.abs(lam)), np.sign(lam)


def threshold_basis(s, tau: float) -> np.ndarray:
    """Columns ``u_k / sqrt(|lambda_k|)`` for eigenpairs of ``s`` with ``|lambda_k| >= tau``.

    For a positive semidefinite ``s`` this is canonical orthogonalization and
    ``W^H s W = I``.  For an indefinite ``s`` (a rotated overlap) the kept
    negative directions give ``-1`` entries in ``W^H s W`` instead.
    The result may have zero columns.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return _whiten(np.asarray(s, dtype=complex), tau)[0]


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    vectors = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    for k in range(vectors.shape[1]):
        col = vectors[:, k]
        i = np.flatnonzero(np.abs(col) > 1e-12)[0]
        vectors[:, k] = col * (np.conj(col[i]) / abs(col[i]))
    return vectors


def _reduced_solve(h: np.ndarray, s: np.ndarray, tau: float):
    """Solve the thresholded problem; returns (values, vectors, kept_dim, n_complex)."""
    w, signs = _whiten(s, tau)
    k = w.shape[1]
    if k == 0:
        raise EmptySubspace(f"threshold tau={tau} discarded all {s.shape[0]} directions")
    a = w.conj().T @ h @ w
    a = 0.5 * (a + a.conj().T)
    n_complex = 0
    if np.all(signs > 0):
        vals, y = eigh(a)
    else:
        # indefinite metric: A y = mu J y  <=>  (J A) y = mu y
        vals, y = np.linalg.eig(signs[:, None] * a)
        real = np.abs(vals.imag) <= COMPLEX_RTOL * (1.0 + np.abs(vals.real))
        n_complex = int(np.count_nonzero(~real))
        vals, y = vals[real].real, y[:, real]
        order = np.argsort(vals, kind="stable")
        vals, y = vals[order], y[:, order]
    return vals, w @ y, k, n_complex


def solve_gevp_thresholded(p: MatrixPencil, tau: float) -> RitzSolution:
    """Naive thresholding: drop overlap directions below ``tau`` and solve what remains."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    vals, vecs, k, n_complex = _reduced_solve(p.h, p.s, tau)
    vecs = _fix_phase(vecs) if vecs.shape[1] else vecs
    return RitzSolution(vals, vecs, k, 0.0, float(tau), 0, n_complex)


def rotate_pencil(p: MatrixPencil, theta: float) -> MatrixPencil:
    """``(H cos t - S sin t, S cos t + H sin t)``."""
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    c, s = np.cos(theta), np.sin(theta)
    return MatrixPencil(p.h * c - p.s * s, p.s * c + p.h * s)


def forward_rotate(mu: float, theta: float) -> float:
    """Image of the eigenvalue ``mu`` under the pencil rotation by ``theta``."""
    c, s = np.cos(theta), np.sin(theta)
    den = c + mu * s
    if abs(den) <= POLE_TOL:
        raise AtInfinity(f"mu={mu} maps to infinity at theta={theta}")
    return (mu * c - s) / den


def back_transform(mu_theta: float, theta: float) -> float:
    """Undo the rotation on an eigenvalue of the rotated pencil."""
    c, s = np.cos(theta), np.sin(theta)
    den = c - mu_theta * s
    if abs(den) <= POLE_TOL:
        raise AtInfinity(f"mu_theta={mu_theta} maps to infinity at theta={theta}")
    return (mu_theta * c + s) / den


def solve_rotated(p: MatrixPencil, theta: float, tau: float) -> RitzSolution:
    """Rotate by ``theta``, threshold at ``tau``, solve, and map eigenvalues back.

    Back-transformed values are re-sorted together with their vectors; values
    landing at infinity are dropped and counted in ``n_infinite``.
    """
    if theta == 0:
        return solve_gevp_thresholded(p, tau)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    rp = rotate_pencil(p, theta)
    mu_t, vecs, k, n_complex = _reduced_solve(rp.h, rp.s, tau)
    c, s = np.cos(theta), np.sin(theta)
    den = c - mu_t * s
    finite = np.abs(den) > POLE_TOL
    values = (mu_t[finite] * c + s) / den[finite]
    vecs = vecs[:, finite]
    order = np.argsort(values, kind="stable")
    values, vecs = values[order], vecs[:, order]
    if vecs.shape[1]:
        vecs = _fix_phase(vecs)
    return RitzSolution(
        values, vecs, k, float(theta), float(tau), int(np.count_nonzero(~finite)), n_complex
    )


def tikhonov_solve(p: MatrixPencil, eps: float) -> RitzSolution:
    """Solve ``(H, S + eps I)`` without thresholding."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    shifted = p.s + eps * np.eye(p.dim)
    try:
        np.linalg.cholesky(shifted)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"S + {eps} I is not positive definite") from exc
    return solve_gevp_thresholded(MatrixPencil(p.h, shifted), 0.0)


def noise_magnitude(truth: MatrixPencil, noisy: MatrixPencil) -> float:
    """``sqrt(||E||^2 + ||F||^2)`` in spectral norm, with E, F the perturbations."""
    if truth.dim != noisy.dim:
        raise DimensionMismatch(f"{truth.dim} vs {noisy.dim}")
    e = np.linalg.norm(noisy.h - truth.h, 2)
    f = np.linalg.norm(noisy.s - truth.s, 2)
    return float(np.hypot(e, f))


def ground_sensitivity(p: MatrixPencil, tau: float, theta: float = 0.0) -> float:
    """Norm of the ground Ritz vector rescaled to ``|c^H S_theta c| = 1``.

    Small values mean the ground eigenvalue sits far from the origin of the
    eigenray plane and is robust to perturbations.  ``S_theta`` is the overlap
    the solve actually thresholded (``p.s`` when ``theta == 0``).
    """
    sol = solve_rotated(p, theta, tau)
    c = sol.vectors[:, 0]
    s_used = p.s if theta == 0 else rotate_pencil(p, theta).s
    norm = abs(np.vdot(c, s_used @ c).real)
    if norm <= NORMALIZATION_FLOOR:
        raise DegenerateNormalization(f"c^H S c = {norm:.3e}")
    return float(np.linalg.norm(c) / np.sqrt(norm))


def batched_ground(h: np.ndarray, s: np.ndarray, theta, tau: float):
    """Ground values of a stack of pencils ``(n, d, d)`` at one or many angles.

    Returns ``(ground, kept)`` with shape ``(n,)`` for a scalar ``theta`` and
    ``(len(theta), n)`` for an array.  ``ground`` is NaN where thresholding
    left nothing or every value went to infinity.  This is the vectorized
    counterpart of ``solve_rotated(...).ground``.
    """
    h = np.asarray(h, dtype=complex)
    s = np.asarray(s, dtype=complex)
    scalar = np.ndim(theta) == 0
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    m, n, d = len(thetas), h.shape[0], h.shape[-1]
    c = np.cos(thetas)
    sn = np.sin(thetas)
    # exact (H, S) at theta == 0 keeps the naive path bit-identical
    c[thetas == 0], sn[thetas == 0] = 1.0, 0.0
    hr = (h[None] * c[:, None, None, None] - s[None] * sn[:, None, None, None]).reshape(m * n, d, d)
    sr = (s[None] * c[:, None, None, None] + h[None] * sn[:, None, None, None]).reshape(m * n, d, d)
    c_rows = np.repeat(c, n)
    sn_rows = np.repeat(sn, n)

    lam, u = eigh(sr)
    keep = _keep_mask(lam, tau)
    kept = keep.sum(axis=-1)
    ground = np.full(m * n, np.nan)
    key = keep * np.sign(lam).astype(np.int8)
    patterns, inverse = np.unique(key, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    for g, pattern in enumerate(patterns):
        mask = pattern != 0
        if not mask.any():
            continue
        idx = np.flatnonzero(inverse == g)
        lg = lam[idx][:, mask]
        w = u[idx][:, :, mask] / np.sqrt(np.abs(lg))[:, None, :]
        a = np.conj(np.swapaxes(w, -1, -2)) @ hr[idx] @ w
        a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
        if np.all(pattern[mask] > 0):
            vals = np.linalg.eigvalsh(a)
        else:
            vals = np.linalg.eigvals(pattern[mask][None, :, None] * a)
            real = np.abs(vals.imag) <= COMPLEX_RTOL * (1.0 + np.abs(vals.real))
            vals = np.where(real, vals.real, np.nan)
        ci, si = c_rows[idx][:, None], sn_rows[idx][:, None]
        den = ci - vals * si
        with np.errstate(invalid="ignore", divide="ignore"):
            back = np.where(np.abs(den) > POLE_TOL, (vals * ci + si) / den, np.nan)
        best = np.where(np.isnan(back), np.inf, back).min(axis=-1)
        ground[idx] = np.where(np.isfinite(best), best, np.nan)
    if scalar:
        return ground, kept
    return ground.reshape(m, n), kept.reshape(m, n)
