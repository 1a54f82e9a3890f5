"""Nearest physical overlap matrix: Hermitian, PSD and unit diagonal.

Solved with Dykstra-corrected alternating projections between the PSD cone
and the affine set of unit-diagonal Hermitian matrices (the classic nearest
correlation matrix scheme).  Works on a single matrix or a stack ``(n, d, d)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .pencil import eigh, hermitian

log = logging.getLogger(__name__)

MAX_ITER = 500
TOL = 1e-10
PSD_TOL = 1e-9
DIAG_TOL = 1e-10


@dataclass(frozen=True)
class ProjectionReport:
    projected: np.ndarray
    frobenius_distance: float
    iterations: int
    converged: bool


def _herm(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _psd_clip(a):
    lam, u = eigh(a)
    return _herm((u * np.maximum(lam, 0.0)[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2)))


def _unit_diag(a):
    a = a.copy()
    idx = np.arange(a.shape[-1])
    a[..., idx, idx] = 1.0
    return a


def is_physical(s, psd_tol: float = PSD_TOL, diag_tol: float = DIAG_TOL) -> np.ndarray:
    """Per-matrix check of the unit-diagonal and PSD constraints."""
    s = np.asarray(s)
    diag = np.diagonal(s, axis1=-2, axis2=-1)
    ok_diag = np.all(np.abs(diag - 1.0) <= diag_tol, axis=-1)
    ok_psd = eigh(s)[0][..., 0] >= -psd_tol
    return ok_diag & ok_psd


def project_stack(s, max_iter: int = MAX_ITER, tol: float = TOL):
    """Project every matrix of a stack; returns (projected, iterations, converged).

    Matrices that already satisfy the constraints are returned untouched with
    one iteration reported.
    """
    s = _herm(np.asarray(s, dtype=complex))
    single = s.ndim == 2
    if single:
        s = s[None]
    n = s.shape[0]
    out = s.copy()
    iterations = np.ones(n, dtype=int)
    converged = np.ones(n, dtype=bool)

    todo = np.flatnonzero(~is_physical(s))
    if todo.size:
        y = s[todo].copy()
        correction = np.zeros_like(y)
        active = np.ones(todo.size, dtype=bool)
        its = np.zeros(todo.size, dtype=int)
        for it in range(1, max_iter + 1):
            a = np.flatnonzero(active)
            r = y[a] - correction[a]
            x = _psd_clip(r)
            correction[a] = x - r
            y_new = _unit_diag(x)
            step = np.linalg.norm(y_new - y[a], axis=(-2, -1))
            y[a] = y_new
            its[a] = it
            done = step <= tol
            active[a[done]] = False
            if not active.any():
                break
        out[todo] = y
        iterations[todo] = its
        converged[todo] = ~active
        if active.any():
            log.warning("PSD projection hit max_iter=%d on %d matrices", max_iter, active.sum())

    if single:
        return out[0], int(iterations[0]), bool(converged[0])
    return out, iterations, converged


def nearest_physical_overlap(s, max_iter: int = MAX_ITER, tol: float = TOL) -> ProjectionReport:
    """Frobenius-nearest Hermitian PSD unit-diagonal matrix to ``s``.

    A non-converged solve still returns the last iterate, flagged with
    ``converged=False``; callers decide whether to proceed.
    """
    s = hermitian(s)
    projected, iterations, converged = project_stack(s, max_iter, tol)
    projected.setflags(write=False)
    return ProjectionReport(
        projected=projected,
        frobenius_distance=float(np.linalg.norm(projected - s)),
        iterations=iterations,
        converged=converged,
    )
